//! Bulk load with immediate or deferred constraint checking.

use std::fmt;
use std::io::BufRead;

use thiserror::Error;

use super::tables::{read_elements, read_vertices};
use super::tabular::FormatError;
use crate::mesh::{check_vertex, ElementChecker, Mesh, MeshError, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetTable {
    Vertices,
    Elements,
}

impl TargetTable {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetTable::Vertices => "vertices",
            TargetTable::Elements => "elements",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckMode {
    /// Ingest every row, then check everything and report.
    #[default]
    Deferred,
    /// Check each row as it is inserted; the first failure undoes the load.
    Immediate,
}

impl CheckMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "deferred" => Some(CheckMode::Deferred),
            "immediate" => Some(CheckMode::Immediate),
            _ => None,
        }
    }
}

/// A violation attributed to a line of the input file.
#[derive(Debug, Clone, PartialEq)]
pub struct RowViolation {
    pub line: usize,
    pub violation: Violation,
}

impl fmt::Display for RowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line={} {}", self.line, self.violation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub table: TargetTable,
    pub rows: usize,
    pub loaded: usize,
    pub violations: Vec<RowViolation>,
}

impl LoadReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "table={} rows={} loaded={} violations={}",
            self.table.as_str(),
            self.rows,
            self.loaded,
            self.violations.len()
        )?;
        for v in &self.violations {
            writeln!(f, "violation table={} {v}", self.table.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("line {line}: {error}")]
    Constraint { line: usize, error: MeshError },
}

/// Loads one table file into `mesh`.
///
/// The whole file is parsed before anything is inserted, so a parse error
/// leaves the mesh untouched. In deferred mode every row is ingested
/// (duplicate primary keys excepted, since the key is the storage order)
/// and the report lists each violating row. In immediate mode the first
/// violating row aborts the load and rows inserted before it are removed.
pub fn bulk_load(
    mesh: &mut Mesh,
    r: impl BufRead,
    table: TargetTable,
    mode: CheckMode,
) -> Result<LoadReport, LoadError> {
    match table {
        TargetTable::Vertices => load_vertices(mesh, r, mode),
        TargetTable::Elements => load_elements(mesh, r, mode),
    }
}

fn load_vertices(mesh: &mut Mesh, r: impl BufRead, mode: CheckMode) -> Result<LoadReport, LoadError> {
    let rows = read_vertices(r)?;
    let mut report = LoadReport { table: TargetTable::Vertices, rows: rows.len(), loaded: 0, violations: Vec::new() };
    match mode {
        CheckMode::Immediate => {
            let mut inserted = Vec::with_capacity(rows.len());
            for (line, v) in rows {
                if let Err(error) = mesh.add_vertex(v) {
                    for id in inserted {
                        mesh.remove_vertex(id).expect("rolled back vertex was inserted");
                    }
                    return Err(LoadError::Constraint { line, error });
                }
                inserted.push(v.id);
            }
            report.loaded = inserted.len();
        }
        CheckMode::Deferred => {
            for (line, v) in rows {
                if mesh.insert_vertex_unchecked(v).is_err() {
                    report
                        .violations
                        .push(RowViolation { line, violation: Violation::DuplicateVertexId { vertex: v.id } });
                    continue;
                }
                report.loaded += 1;
                report
                    .violations
                    .extend(check_vertex(&v).into_iter().map(|violation| RowViolation { line, violation }));
            }
        }
    }
    Ok(report)
}

fn load_elements(mesh: &mut Mesh, r: impl BufRead, mode: CheckMode) -> Result<LoadReport, LoadError> {
    let rows = read_elements(r)?;
    let mut report = LoadReport { table: TargetTable::Elements, rows: rows.len(), loaded: 0, violations: Vec::new() };
    match mode {
        CheckMode::Immediate => {
            let mut inserted = Vec::with_capacity(rows.len());
            for (line, t) in rows {
                if let Err(error) = mesh.add_tetrahedron(t.id, t.corners) {
                    for id in inserted {
                        mesh.remove_element(id).expect("rolled back element was inserted");
                    }
                    return Err(LoadError::Constraint { line, error });
                }
                inserted.push(t.id);
            }
            report.loaded = inserted.len();
        }
        CheckMode::Deferred => {
            let mut checker = ElementChecker::new();
            for e in mesh.elements() {
                checker.check(mesh.vertex_table(), e);
            }
            let mut staged = Vec::with_capacity(rows.len());
            for (line, t) in rows {
                if mesh.insert_element_unchecked(t).is_err() {
                    report
                        .violations
                        .push(RowViolation { line, violation: Violation::DuplicateElementId { elem: t.id } });
                    continue;
                }
                staged.push((line, t));
            }
            report.loaded = staged.len();
            // constraint checks run only after every row is in
            for (line, t) in staged {
                report.violations.extend(
                    checker
                        .check(mesh.vertex_table(), &t)
                        .into_iter()
                        .map(|violation| RowViolation { line, violation }),
                );
            }
            report.violations.sort_by_key(|v| v.line);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{ElemId, VertexId};

    const VERTS: &str =
        "id:int,x:float,y:float,z:float\n1,0.0,0.0,0.0\n2,1.0,0.0,0.0\n3,0.0,1.0,0.0\n4,0.0,0.0,1.0\n5,1.0,1.0,1.0\n";
    const ELEMS: &str = "id:int,v0:int,v1:int,v2:int,v3:int\n1,1,2,3,4\n2,2,3,4,5\n3,1,2,3,999\n4,1,3,4,5\n";

    fn with_vertices() -> Mesh {
        let mut m = Mesh::new();
        let r = bulk_load(&mut m, VERTS.as_bytes(), TargetTable::Vertices, CheckMode::Deferred).unwrap();
        assert!(r.is_clean());
        assert_eq!(r.loaded, 5);
        m
    }

    #[test]
    fn deferred_reports_dangling_row() {
        let mut m = with_vertices();
        let r = bulk_load(&mut m, ELEMS.as_bytes(), TargetTable::Elements, CheckMode::Deferred).unwrap();
        assert_eq!(r.loaded, 4);
        assert_eq!(m.element_count(), 4);
        assert_eq!(
            r.violations,
            vec![RowViolation {
                line: 4,
                violation: Violation::DanglingVertex { elem: ElemId(3), vertex: VertexId(999) }
            }]
        );
        assert_eq!(r.to_string(), "table=elements rows=4 loaded=4 violations=1\nviolation table=elements line=4 kind=dangling-vertex elem=3 vertex=999\n");
    }

    #[test]
    fn immediate_aborts_and_rolls_back() {
        let mut m = with_vertices();
        let err = bulk_load(&mut m, ELEMS.as_bytes(), TargetTable::Elements, CheckMode::Immediate).unwrap_err();
        assert_eq!(
            err,
            LoadError::Constraint {
                line: 4,
                error: MeshError::DanglingVertex { elem: ElemId(3), vertex: VertexId(999) }
            }
        );
        assert_eq!(m.element_count(), 0);

        let bad = "id:int,x:float,y:float,z:float\n10,0.0,0.0,0.0\n11,inf,0.0,0.0\n";
        let err = bulk_load(&mut m, bad.as_bytes(), TargetTable::Vertices, CheckMode::Immediate).unwrap_err();
        assert!(matches!(err, LoadError::Constraint { line: 3, .. }));
        assert_eq!(m.vertex_count(), 5);
    }

    #[test]
    fn deferred_flags_duplicates_against_existing_rows() {
        let mut m = with_vertices();
        bulk_load(
            &mut m,
            "id:int,v0:int,v1:int,v2:int,v3:int\n1,1,2,3,4\n".as_bytes(),
            TargetTable::Elements,
            CheckMode::Immediate,
        )
        .unwrap();
        let more = "id:int,v0:int,v1:int,v2:int,v3:int\n7,4,3,2,1\n1,2,3,4,5\n8,1,1,2,3\n";
        let r = bulk_load(&mut m, more.as_bytes(), TargetTable::Elements, CheckMode::Deferred).unwrap();
        let kinds: Vec<(usize, &str)> = r.violations.iter().map(|v| (v.line, v.violation.kind())).collect();
        assert_eq!(kinds, vec![(2, "duplicate-element"), (3, "duplicate-element-id"), (4, "degenerate-element")]);
        assert_eq!(r.loaded, 2);
    }

    #[test]
    fn parse_error_leaves_mesh_untouched() {
        let mut m = with_vertices();
        let bad = "id:int,v0:int,v1:int,v2:int,v3:int\n1,1,2,3,4\n2,x,3,4,5\n";
        let err = bulk_load(&mut m, bad.as_bytes(), TargetTable::Elements, CheckMode::Deferred).unwrap_err();
        assert!(matches!(err, LoadError::Format(FormatError::Parse { line: 3, .. })));
        assert_eq!(m.element_count(), 0);
        let wrong = "id:int,a:float\n";
        assert!(matches!(
            bulk_load(&mut m, wrong.as_bytes(), TargetTable::Vertices, CheckMode::Deferred),
            Err(LoadError::Format(FormatError::SchemaMismatch { .. }))
        ));
    }
}

//! Scatter of mesh partitions into bundles and staged gather of solver
//! results.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{HaloSpec, PartitionError, PartitionMap};
use crate::attributes::{AttrError, AttributeStore, Classification, Topology};
use crate::io::bundle::{bundle_dir, write_bundles, BundleHeader, PartitionBundle};
use crate::io::tabular::{read_table, Column, ColumnType, Field, Schema, TableWriter};
use crate::mesh::{ElemId, Mesh, MeshError};

/// Attribute tables used to fill the attribute section of each bundle.
#[derive(Debug, Clone, Copy)]
pub struct AttributeSource<'a> {
    pub store: &'a AttributeStore,
    pub classification: &'a Classification,
    pub topology: &'a Topology,
}

/// One bundle per partition. Attributes that resolve to nothing for an
/// element are left out; any other resolution failure is an error.
pub fn build_bundles(
    m: &Mesh,
    pm: &PartitionMap,
    halos: &HaloSpec,
    attrs: Option<AttributeSource<'_>>,
) -> Result<Vec<PartitionBundle>, PartitionError> {
    if halos.parts.len() != pm.parts() {
        return Err(PartitionError::MalformedBundle(format!(
            "halo spec has {} partitions, map has {}",
            halos.parts.len(),
            pm.parts()
        )));
    }
    let mut out = Vec::with_capacity(pm.parts());
    for (p, halo) in halos.parts.iter().enumerate() {
        let vertices = halo
            .required
            .iter()
            .map(|&v| m.vertex(v).copied().ok_or(MeshError::UnknownVertex(v)))
            .collect::<Result<Vec<_>, _>>()?;
        let elements = halo
            .owned
            .iter()
            .map(|&e| m.element(e).copied().ok_or(MeshError::UnknownElement(e)))
            .collect::<Result<Vec<_>, _>>()?;
        let ghosts = halo.ghosts.iter().flat_map(|(&v, others)| others.iter().map(move |&q| (v, q))).collect();
        let mut attributes = Vec::new();
        if let Some(src) = attrs {
            let report = src.store.resolve_all(halo.owned.iter().copied(), None, src.classification, src.topology);
            if let Some((_, err)) = report.failures.into_iter().find(|(_, e)| !matches!(e, AttrError::NotFound { .. }))
            {
                return Err(PartitionError::Attribute(err));
            }
            attributes = report.table.into_iter().flat_map(|(e, rs)| rs.into_iter().map(move |r| (e, r))).collect();
        }
        let mut b = PartitionBundle {
            header: BundleHeader {
                partition: p as u32,
                parts: pm.parts(),
                stage: pm.stage(),
                bootstrap: pm.ancestry()[p],
                vertices: 0,
                elements: 0,
                ghosts: 0,
                attributes: 0,
            },
            vertices,
            elements,
            ghosts,
            attributes,
        };
        b.seal();
        out.push(b);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScatterReport {
    pub directories: Vec<PathBuf>,
    /// Element count per bundle.
    pub sizes: Vec<usize>,
    /// Refined partitions grouped under the bootstrap partition they came
    /// from. Groups are disjoint, so each can be shipped independently.
    pub groups: BTreeMap<u32, Vec<u32>>,
}

/// Builds and writes every bundle under `dest`.
pub fn scatter(
    m: &Mesh,
    pm: &PartitionMap,
    halos: &HaloSpec,
    attrs: Option<AttributeSource<'_>>,
    dest: &Path,
) -> Result<ScatterReport, PartitionError> {
    let bundles = build_bundles(m, pm, halos, attrs)?;
    let directories = write_bundles(dest, &bundles)?;
    Ok(ScatterReport { directories, sizes: bundles.iter().map(|b| b.elements.len()).collect(), groups: pm.groups() })
}

/// Rebuilds a mesh from the vertex and element sections of bundles.
/// Vertices repeated across bundles must agree bit for bit.
pub fn reassemble(bundles: &[PartitionBundle]) -> Result<Mesh, MeshError> {
    let mut m = Mesh::new();
    for b in bundles {
        for v in &b.vertices {
            match m.vertex(v.id) {
                Some(existing) if existing.coords().map(f64::to_bits) == v.coords().map(f64::to_bits) => {}
                _ => m.add_vertex(*v)?,
            }
        }
    }
    for b in bundles {
        for e in &b.elements {
            m.add_tetrahedron(e.id, e.corners)?;
        }
    }
    Ok(m)
}

/// A solver output row: `values` holds the state variables of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub elem: ElemId,
    pub sample: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub partition: u32,
    pub rows: Vec<ResultRow>,
}

pub fn result_schema(state_vars: usize) -> Schema {
    let mut columns = vec![
        Column { name: "elem_id".into(), ty: ColumnType::Int },
        Column { name: "sample".into(), ty: ColumnType::Int },
    ];
    columns.extend((0..state_vars).map(|i| Column { name: format!("s{i}"), ty: ColumnType::Float }));
    Schema { columns }
}

fn state_vars_of(schema: &Schema) -> Option<usize> {
    let s = schema.len().checked_sub(2)?;
    (*schema == result_schema(s)).then_some(s)
}

/// Writes `part-NNNNN/results.csv` under `dest` and returns the file path.
pub fn write_result_bundle(dest: &Path, rb: &ResultBundle) -> Result<PathBuf, PartitionError> {
    let s = rb.rows.first().map_or(0, |r| r.values.len());
    if rb.rows.iter().any(|r| r.values.len() != s) {
        return Err(PartitionError::MalformedBundle(format!("partition {} rows differ in width", rb.partition)));
    }
    let dir = bundle_dir(dest, rb.partition);
    fs::create_dir_all(&dir)?;
    let path = dir.join("results.csv");
    let mut t = TableWriter::new(BufWriter::new(File::create(&path)?), &result_schema(s))?;
    let mut row = Vec::with_capacity(s + 2);
    for r in &rb.rows {
        row.clear();
        row.push(Field::Int(r.elem.0 as i64));
        row.push(Field::Int(r.sample as i64));
        row.extend(r.values.iter().map(|&v| Field::Float(v)));
        t.write_row(&row)?;
    }
    t.finish()?;
    Ok(path)
}

/// Gathered results keyed by (element, sample).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub state_vars: Option<usize>,
    pub rows: BTreeMap<(ElemId, u64), Vec<f64>>,
}

impl ResultTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GatherReport {
    pub rows: usize,
    pub files: usize,
    /// Most loads observed running at the same time.
    pub peak_loaders: usize,
}

fn load_staged(path: &Path, table: &Mutex<ResultTable>) -> Result<(), PartitionError> {
    let malformed = |msg: String| PartitionError::MalformedBundle(format!("{}: {msg}", path.display()));
    let parsed = read_table(BufReader::new(File::open(path)?), None).map_err(|e| malformed(e.to_string()))?;
    let s = state_vars_of(&parsed.schema).ok_or_else(|| malformed(format!("unexpected header `{}`", parsed.schema)))?;
    let mut rows = Vec::with_capacity(parsed.rows.len());
    for (line, f) in parsed.rows {
        let (elem, sample) = (f[0].as_int(), f[1].as_int());
        if elem <= 0 || sample < 0 {
            return Err(malformed(format!("line {line}: invalid key ({elem}, {sample})")));
        }
        rows.push(((ElemId(elem as u64), sample as u64), f[2..].iter().map(Field::as_float).collect::<Vec<_>>()));
    }
    let mut t = table.lock().expect("result table lock poisoned");
    match t.state_vars {
        Some(prev) if prev != s => return Err(malformed(format!("{s} state variables, earlier bundles have {prev}"))),
        _ => t.state_vars = Some(s),
    }
    for (key, values) in rows {
        if t.rows.insert(key, values).is_some() {
            return Err(PartitionError::DuplicateResultKey { elem: key.0, sample: key.1 });
        }
    }
    Ok(())
}

/// Copies every result file into `staging`, then loads the staged copies
/// with at most `loader_concurrency` loads in flight.
pub fn gather(
    bundles: &[PathBuf],
    staging: &Path,
    loader_concurrency: usize,
) -> Result<(ResultTable, GatherReport), PartitionError> {
    let loaders = loader_concurrency.max(1);
    fs::create_dir_all(staging)?;
    let mut staged = Vec::with_capacity(bundles.len());
    for (i, src) in bundles.iter().enumerate() {
        let dst = staging.join(format!("results-{i:05}.csv"));
        fs::copy(src, &dst).map_err(|e| PartitionError::Io(format!("{}: {e}", src.display())))?;
        staged.push(dst);
    }

    let table = Mutex::new(ResultTable::default());
    let next = AtomicUsize::new(0);
    let active = AtomicUsize::new(0);
    let peak = AtomicUsize::new(0);
    let errors: Mutex<Vec<(usize, PartitionError)>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..loaders.min(staged.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = staged.get(i) else { break };
                let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                let res = load_staged(path, &table);
                active.fetch_sub(1, Ordering::SeqCst);
                if let Err(e) = res {
                    errors.lock().expect("error list lock poisoned").push((i, e));
                }
            });
        }
    });
    let mut errors = errors.into_inner().expect("error list lock poisoned");
    errors.sort_by_key(|(i, _)| *i);
    if let Some((_, e)) = errors.into_iter().next() {
        return Err(e);
    }
    let table = table.into_inner().expect("result table lock poisoned");
    let report = GatherReport { rows: table.len(), files: staged.len(), peak_loaders: peak.into_inner() };
    Ok((table, report))
}

//! Schemas and typed readers/writers for each table kind.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::tabular::{read_table, Field, FormatError, Schema, Table, TableWriter};
use crate::mesh::{Cell, ElemId, Mesh, Tetrahedron, Vertex, VertexId};
use crate::partition::{PartitionMap, Stage};
use crate::spatial::{CellTable, MortonKey};
use crate::views::IncidenceRow;

pub const VERTICES: &str = "id:int,x:float,y:float,z:float";
pub const ELEMENTS: &str = "id:int,v0:int,v1:int,v2:int,v3:int";
pub const INCIDENCE: &str = "elem_id:int,rank:int,vertex_id:int";
pub const CELLS: &str = "id:int,x_min:float,y_min:float,z_min:float,x_max:float,y_max:float,z_max:float";
pub const MORTON: &str = "elem_id:int,code:int";
pub const PARTITION: &str = "elem_id:int,part:int";
pub const ANCESTRY: &str = "part:int,bootstrap:int,stage:int";

pub fn schema(s: &str) -> Schema {
    Schema::parse(s).expect("built-in schemas are well formed")
}

pub(crate) fn id_field(v: u64) -> Field {
    Field::Int(v as i64)
}

/// Converts a signed int column to an id. Negative values are a parse
/// error; zero is left for the integrity checks to report.
pub(crate) fn to_id(v: i64, line: usize) -> Result<u64, FormatError> {
    u64::try_from(v).map_err(|_| FormatError::Parse { line, msg: format!("negative identifier {v}") })
}

pub fn write_vertices<'a>(w: impl Write, vertices: impl IntoIterator<Item = &'a Vertex>) -> std::io::Result<()> {
    let mut t = TableWriter::new(w, &schema(VERTICES))?;
    for v in vertices {
        t.write_row(&[id_field(v.id.0), Field::Float(v.x), Field::Float(v.y), Field::Float(v.z)])?;
    }
    t.finish().map(|_| ())
}

pub fn write_elements<'a>(w: impl Write, elements: impl IntoIterator<Item = &'a Tetrahedron>) -> std::io::Result<()> {
    let mut t = TableWriter::new(w, &schema(ELEMENTS))?;
    for e in elements {
        let c = e.corners;
        t.write_row(&[id_field(e.id.0), id_field(c[0].0), id_field(c[1].0), id_field(c[2].0), id_field(c[3].0)])?;
    }
    t.finish().map(|_| ())
}

pub fn write_incidence(w: impl Write, rows: impl IntoIterator<Item = IncidenceRow>) -> std::io::Result<()> {
    let mut t = TableWriter::new(w, &schema(INCIDENCE))?;
    for r in rows {
        t.write_row(&[id_field(r.elem_id.0), Field::Int(i64::from(r.rank)), id_field(r.vertex_id.0)])?;
    }
    t.finish().map(|_| ())
}

pub fn write_cells(w: impl Write, cells: &CellTable) -> std::io::Result<()> {
    let mut t = TableWriter::new(w, &schema(CELLS))?;
    for c in cells.iter() {
        let mut row = vec![id_field(c.id.0)];
        row.extend(c.min.iter().chain(&c.max).map(|&v| Field::Float(v)));
        t.write_row(&row)?;
    }
    t.finish().map(|_| ())
}

pub fn write_morton(w: impl Write, keys: &[(MortonKey, ElemId)]) -> std::io::Result<()> {
    let mut t = TableWriter::new(w, &schema(MORTON))?;
    for (k, e) in keys {
        t.write_row(&[id_field(e.0), Field::Int(k.code as i64)])?;
    }
    t.finish().map(|_| ())
}

/// Writes the assignment table and the per-partition ancestry table.
pub fn write_partition(assign: impl Write, ancestry: impl Write, pm: &PartitionMap) -> std::io::Result<()> {
    let mut t = TableWriter::new(assign, &schema(PARTITION))?;
    for (e, p) in pm.iter() {
        t.write_row(&[id_field(e.0), Field::Int(i64::from(p))])?;
    }
    t.finish()?;
    let mut t = TableWriter::new(ancestry, &schema(ANCESTRY))?;
    for (p, &a) in pm.ancestry().iter().enumerate() {
        t.write_row(&[Field::Int(p as i64), Field::Int(i64::from(a)), Field::Int(pm.stage().code())])?;
    }
    t.finish().map(|_| ())
}

pub fn read_vertices(r: impl BufRead) -> Result<Vec<(usize, Vertex)>, FormatError> {
    let t = read_table(r, Some(&schema(VERTICES)))?;
    t.rows
        .into_iter()
        .map(|(line, f)| {
            let id = to_id(f[0].as_int(), line)?;
            Ok((line, Vertex::new(id, f[1].as_float(), f[2].as_float(), f[3].as_float())))
        })
        .collect()
}

pub fn read_elements(r: impl BufRead) -> Result<Vec<(usize, Tetrahedron)>, FormatError> {
    let t = read_table(r, Some(&schema(ELEMENTS)))?;
    t.rows
        .into_iter()
        .map(|(line, f)| {
            let mut ids = [0u64; 5];
            for (slot, field) in ids.iter_mut().zip(&f) {
                *slot = to_id(field.as_int(), line)?;
            }
            Ok((line, Tetrahedron::new(ids[0], [ids[1], ids[2], ids[3], ids[4]])))
        })
        .collect()
}

pub fn read_incidence(r: impl BufRead) -> Result<Vec<IncidenceRow>, FormatError> {
    let t = read_table(r, Some(&schema(INCIDENCE)))?;
    t.rows
        .into_iter()
        .map(|(line, f)| {
            let rank = u8::try_from(f[1].as_int())
                .map_err(|_| FormatError::Parse { line, msg: format!("rank {} out of range", f[1].as_int()) })?;
            Ok(IncidenceRow {
                elem_id: ElemId(to_id(f[0].as_int(), line)?),
                rank,
                vertex_id: VertexId(to_id(f[2].as_int(), line)?),
            })
        })
        .collect()
}

pub fn read_cells(r: impl BufRead) -> Result<CellTable, FormatError> {
    let t = read_table(r, Some(&schema(CELLS)))?;
    let mut out = CellTable::new();
    for (line, f) in t.rows {
        let cell = Cell {
            id: ElemId(to_id(f[0].as_int(), line)?),
            min: [f[1].as_float(), f[2].as_float(), f[3].as_float()],
            max: [f[4].as_float(), f[5].as_float(), f[6].as_float()],
        };
        out.insert(cell).map_err(|e| FormatError::Parse { line, msg: e.to_string() })?;
    }
    Ok(out)
}

pub fn read_partition(assign: impl BufRead, ancestry: impl BufRead) -> Result<PartitionMap, FormatError> {
    let t = read_table(assign, Some(&schema(PARTITION)))?;
    let mut map = BTreeMap::new();
    for (line, f) in t.rows {
        let part = u32::try_from(f[1].as_int())
            .map_err(|_| FormatError::Parse { line, msg: "partition id out of range".into() })?;
        map.insert(ElemId(to_id(f[0].as_int(), line)?), part);
    }
    let Table { rows, .. } = read_table(ancestry, Some(&schema(ANCESTRY)))?;
    let mut stage = Stage::Bootstrap;
    let mut anc = Vec::with_capacity(rows.len());
    for (line, f) in rows {
        if f[0].as_int() != anc.len() as i64 {
            return Err(FormatError::Parse { line, msg: "ancestry rows out of order".into() });
        }
        anc.push(f[1].as_int() as u32);
        stage =
            Stage::from_code(f[2].as_int()).ok_or_else(|| FormatError::Parse { line, msg: "unknown stage".into() })?;
    }
    let parts = anc.len();
    PartitionMap::with_ancestry(map, parts, stage, anc).map_err(|e| FormatError::Parse { line: 0, msg: e.to_string() })
}

/// Vertex and element tables of a mesh, in id order.
pub fn dump_mesh(m: &Mesh, vertices: impl Write, elements: impl Write) -> std::io::Result<()> {
    write_vertices(vertices, m.vertices())?;
    write_elements(elements, m.elements())
}

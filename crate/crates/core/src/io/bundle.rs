//! Per-partition bundle directories.
//!
//! ```text
//! <dest>/part-00003/header.csv      partition,parts,stage,bootstrap,<section counts>
//!                  /vertices.csv    required vertices with coordinates
//!                  /elements.csv    owned elements
//!                  /ghosts.csv      (vertex_id, partition) for every other partition sharing a vertex
//!                  /attributes.csv  resolved attributes of owned elements
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use super::attrs::{read_resolved, write_resolved};
use super::tables::{id_field, read_elements, read_vertices, schema, to_id, write_elements, write_vertices};
use super::tabular::{read_table, Field, FormatError, TableWriter};
use crate::attributes::ResolvedAttribute;
use crate::mesh::{ElemId, Tetrahedron, Vertex, VertexId};
use crate::partition::Stage;

pub const HEADER: &str =
    "partition:int,parts:int,stage:int,bootstrap:int,vertices:int,elements:int,ghosts:int,attributes:int";
pub const GHOSTS: &str = "vertex_id:int,partition:int";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundleHeader {
    pub partition: u32,
    pub parts: usize,
    pub stage: Stage,
    /// Bootstrap partition this partition descends from.
    pub bootstrap: u32,
    pub vertices: usize,
    pub elements: usize,
    pub ghosts: usize,
    pub attributes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionBundle {
    pub header: BundleHeader,
    pub vertices: Vec<Vertex>,
    pub elements: Vec<Tetrahedron>,
    /// Shared vertex and one other partition that also requires it.
    pub ghosts: Vec<(VertexId, u32)>,
    pub attributes: Vec<(ElemId, ResolvedAttribute)>,
}

impl PartitionBundle {
    /// Sets the header counts from the section lengths.
    pub fn seal(&mut self) {
        self.header.vertices = self.vertices.len();
        self.header.elements = self.elements.len();
        self.header.ghosts = self.ghosts.len();
        self.header.attributes = self.attributes.len();
    }

    pub fn is_consistent(&self) -> bool {
        self.header.vertices == self.vertices.len()
            && self.header.elements == self.elements.len()
            && self.header.ghosts == self.ghosts.len()
            && self.header.attributes == self.attributes.len()
    }
}

pub fn bundle_dir(dest: &Path, partition: u32) -> PathBuf {
    dest.join(format!("part-{partition:05}"))
}

fn create(path: PathBuf) -> std::io::Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new)
}

pub fn write_bundle(dest: &Path, b: &PartitionBundle) -> std::io::Result<PathBuf> {
    assert!(b.is_consistent(), "bundle header counts disagree with its sections");
    let dir = bundle_dir(dest, b.header.partition);
    fs::create_dir_all(&dir)?;
    let h = &b.header;
    let mut t = TableWriter::new(create(dir.join("header.csv"))?, &schema(HEADER))?;
    t.write_row(&[
        Field::Int(i64::from(h.partition)),
        Field::Int(h.parts as i64),
        Field::Int(h.stage.code()),
        Field::Int(i64::from(h.bootstrap)),
        Field::Int(h.vertices as i64),
        Field::Int(h.elements as i64),
        Field::Int(h.ghosts as i64),
        Field::Int(h.attributes as i64),
    ])?;
    t.finish()?;
    write_vertices(create(dir.join("vertices.csv"))?, &b.vertices)?;
    write_elements(create(dir.join("elements.csv"))?, &b.elements)?;
    let mut t = TableWriter::new(create(dir.join("ghosts.csv"))?, &schema(GHOSTS))?;
    for (v, p) in &b.ghosts {
        t.write_row(&[id_field(v.0), Field::Int(i64::from(*p))])?;
    }
    t.finish()?;
    write_resolved(create(dir.join("attributes.csv"))?, &b.attributes)?;
    Ok(dir)
}

/// Writes every bundle, one thread per bundle.
pub fn write_bundles(dest: &Path, bundles: &[PartitionBundle]) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dest)?;
    std::thread::scope(|s| {
        let handles: Vec<_> = bundles.iter().map(|b| s.spawn(move || write_bundle(dest, b))).collect();
        handles.into_iter().map(|h| h.join().expect("bundle writer panicked")).collect()
    })
}

fn open(path: PathBuf) -> Result<BufReader<File>, FormatError> {
    File::open(&path).map(BufReader::new).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))
}

pub fn read_bundle(dir: &Path) -> Result<PartitionBundle, FormatError> {
    let header_rows = read_table(open(dir.join("header.csv"))?, Some(&schema(HEADER)))?.rows;
    let [(line, f)] = header_rows.as_slice() else {
        return Err(FormatError::Parse { line: 2, msg: "header must have exactly one row".into() });
    };
    let count = |i: usize| {
        usize::try_from(f[i].as_int()).map_err(|_| FormatError::Parse { line: *line, msg: "negative count".into() })
    };
    let header = BundleHeader {
        partition: f[0].as_int() as u32,
        parts: count(1)?,
        stage: Stage::from_code(f[2].as_int())
            .ok_or(FormatError::Parse { line: *line, msg: "unknown stage".into() })?,
        bootstrap: f[3].as_int() as u32,
        vertices: count(4)?,
        elements: count(5)?,
        ghosts: count(6)?,
        attributes: count(7)?,
    };
    let ghosts = read_table(open(dir.join("ghosts.csv"))?, Some(&schema(GHOSTS)))?
        .rows
        .into_iter()
        .map(|(line, f)| Ok((VertexId(to_id(f[0].as_int(), line)?), f[1].as_int() as u32)))
        .collect::<Result<Vec<_>, FormatError>>()?;
    let bundle = PartitionBundle {
        header,
        vertices: read_vertices(open(dir.join("vertices.csv"))?)?.into_iter().map(|(_, v)| v).collect(),
        elements: read_elements(open(dir.join("elements.csv"))?)?.into_iter().map(|(_, e)| e).collect(),
        ghosts,
        attributes: read_resolved(open(dir.join("attributes.csv"))?)?,
    };
    if !bundle.is_consistent() {
        return Err(FormatError::Parse {
            line: 2,
            msg: format!("{}: header counts disagree with sections", dir.display()),
        });
    }
    Ok(bundle)
}

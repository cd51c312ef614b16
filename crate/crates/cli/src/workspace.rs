//! On-disk workspace: table files plus a `manifest.txt` of `key=value`
//! lines describing what is present.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use tetdb_core::attributes::{AttributeStore, Classification, Topology};
use tetdb_core::io::attrs::{
    read_bindings, read_classification, read_topology, write_bindings, write_classification, write_topology,
};
use tetdb_core::io::tables::{
    read_incidence, read_partition, write_elements, write_incidence, write_partition, write_vertices,
};
use tetdb_core::io::{bulk_load, CheckMode, TargetTable};
use tetdb_core::partition::PartitionMap;
use tetdb_core::views::{to_quadruple, RepresentationMode, DEFAULT_DUAL_THRESHOLD};
use tetdb_core::Mesh;

pub const MANIFEST: &str = "manifest.txt";
pub const VERTICES: &str = "vertices.csv";
pub const ELEMENTS: &str = "elements.csv";
pub const INCIDENCE: &str = "incidence.csv";
pub const CELLS: &str = "cells.csv";
pub const MORTON: &str = "morton.csv";
pub const PARTITION: &str = "partition.csv";
pub const ANCESTRY: &str = "ancestry.csv";
pub const TOPOLOGY: &str = "topology.csv";
pub const CLASSIFICATION: &str = "classification.csv";
pub const BINDINGS: &str = "bindings.csv";
pub const SAMPLES: &str = "samples.csv";
pub const RESULTS: &str = "results.csv";
const LOCK: &str = ".lock";

/// Advisory writer lock, released on drop.
pub struct Lock(PathBuf);

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

pub struct Workspace {
    pub root: PathBuf,
    pub manifest: BTreeMap<String, String>,
}

impl Workspace {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        if root.join(MANIFEST).exists() {
            return Self::open(root);
        }
        let mut ws = Self { root: root.to_path_buf(), manifest: BTreeMap::new() };
        ws.set("mode", RepresentationMode::QuadrupleOnly.as_str());
        ws.set("dual_threshold", DEFAULT_DUAL_THRESHOLD);
        ws.set("vertices", 0);
        ws.set("elements", 0);
        ws.save_manifest()?;
        Ok(ws)
    }

    pub fn open(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("{} is not a workspace", root.display()))?;
        let mut manifest = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let (k, v) =
                line.split_once('=').ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), i + 1))?;
            manifest.insert(k.to_string(), v.to_string());
        }
        Ok(Self { root: root.to_path_buf(), manifest })
    }

    pub fn lock(&self) -> Result<Lock> {
        let path = self.root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "pid={}", std::process::id())?;
                Ok(Lock(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                bail!("workspace {} is locked by another writer ({})", self.root.display(), path.display())
            }
            Err(e) => Err(e).with_context(|| format!("locking {}", self.root.display())),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn has(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.manifest.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.manifest.insert(key.to_string(), value.to_string());
    }

    pub fn unset(&mut self, key: &str) {
        self.manifest.remove(key);
    }

    pub fn save_manifest(&self) -> Result<()> {
        let body: String = self.manifest.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        fs::write(self.path(MANIFEST), body).context("writing manifest")
    }

    pub fn mode(&self) -> Result<RepresentationMode> {
        let raw = self.get("mode").unwrap_or("quadruple");
        RepresentationMode::parse(raw).ok_or_else(|| anyhow!("manifest has unknown mode `{raw}`"))
    }

    pub fn dual_threshold(&self) -> Result<usize> {
        self.get("dual_threshold").map_or(Ok(DEFAULT_DUAL_THRESHOLD), |v| v.parse().context("manifest dual_threshold"))
    }

    pub fn reader(&self, name: &str) -> Result<BufReader<File>> {
        let p = self.path(name);
        File::open(&p).map(BufReader::new).with_context(|| format!("opening {}", p.display()))
    }

    pub fn write_with(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        let p = self.path(name);
        let mut w = BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?);
        f(&mut w).with_context(|| format!("writing {}", p.display()))?;
        w.flush()?;
        Ok(())
    }

    fn remove(&self, name: &str) -> Result<()> {
        match fs::remove_file(self.path(name)) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }

    /// Reads the stored mesh. Rows are ingested without checks so that a
    /// workspace holding violations can still be opened and validated.
    pub fn load_mesh(&self) -> Result<Mesh> {
        let mut m = Mesh::new();
        if self.has(VERTICES) {
            bulk_load(&mut m, self.reader(VERTICES)?, TargetTable::Vertices, CheckMode::Deferred)?;
        }
        if self.has(ELEMENTS) {
            bulk_load(&mut m, self.reader(ELEMENTS)?, TargetTable::Elements, CheckMode::Deferred)?;
        } else if self.has(INCIDENCE) {
            let rows = read_incidence(self.reader(INCIDENCE)?)?;
            let mut body = Vec::new();
            write_elements(&mut body, &to_quadruple(&rows)?)?;
            bulk_load(&mut m, &body[..], TargetTable::Elements, CheckMode::Deferred)?;
        }
        m.set_mode(self.mode()?);
        Ok(m)
    }

    /// Writes the mesh in the representations its mode calls for. Any
    /// derived table is dropped because it no longer matches.
    pub fn save_mesh(&mut self, m: &Mesh) -> Result<()> {
        let mode = m.mode();
        self.write_with(VERTICES, |w| write_vertices(w, m.vertices()))?;
        if mode.has_quadruple() {
            self.write_with(ELEMENTS, |w| write_elements(w, m.elements()))?;
        } else {
            self.remove(ELEMENTS)?;
        }
        if let Some(inc) = m.incidence() {
            self.write_with(INCIDENCE, |w| write_incidence(w, inc.rows()))?;
        } else {
            self.remove(INCIDENCE)?;
        }
        for name in [CELLS, MORTON, PARTITION, ANCESTRY] {
            self.remove(name)?;
        }
        for key in ["indexed", "morton_bits", "parts", "stage", "bootstrap_parts"] {
            self.unset(key);
        }
        self.set("mode", mode.as_str());
        self.set("vertices", m.vertex_count());
        self.set("elements", m.element_count());
        self.save_manifest()
    }

    pub fn load_partition(&self) -> Result<PartitionMap> {
        if !self.has(PARTITION) {
            bail!("workspace has no partition; run `partition` first");
        }
        Ok(read_partition(self.reader(PARTITION)?, self.reader(ANCESTRY)?)?)
    }

    pub fn save_partition(&mut self, pm: &PartitionMap, bootstrap: usize) -> Result<()> {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_partition(&mut a, &mut b, pm)?;
        fs::write(self.path(PARTITION), a)?;
        fs::write(self.path(ANCESTRY), b)?;
        self.set("parts", pm.parts());
        self.set("stage", pm.stage().as_str());
        self.set("bootstrap_parts", bootstrap);
        self.save_manifest()
    }

    pub fn load_attributes(&self) -> Result<(Topology, Classification, AttributeStore)> {
        let topo = if self.has(TOPOLOGY) { read_topology(self.reader(TOPOLOGY)?)? } else { Topology::new() };
        let cls = if self.has(CLASSIFICATION) {
            read_classification(self.reader(CLASSIFICATION)?, &topo)?
        } else {
            Classification::new()
        };
        let store = if self.has(BINDINGS) {
            read_bindings(self.reader(BINDINGS)?, self.reader(SAMPLES)?, &topo)?
        } else {
            AttributeStore::new()
        };
        Ok((topo, cls, store))
    }

    pub fn has_attributes(&self) -> bool {
        self.has(BINDINGS)
    }

    pub fn save_attributes(&mut self, topo: &Topology, cls: &Classification, store: &AttributeStore) -> Result<()> {
        self.write_with(TOPOLOGY, |w| write_topology(w, topo))?;
        self.write_with(CLASSIFICATION, |w| write_classification(w, cls))?;
        let (mut b, mut s) = (Vec::new(), Vec::new());
        write_bindings(&mut b, &mut s, store)?;
        fs::write(self.path(BINDINGS), b)?;
        fs::write(self.path(SAMPLES), s)?;
        self.set("topology_entities", topo.entities().count());
        self.set("classified", cls.len());
        self.set("bindings", store.len());
        self.save_manifest()
    }
}

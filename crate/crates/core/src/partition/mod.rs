//! Two-step partitioning (coordinate bisection, then graph refinement),
//! halo computation, and the scatter/gather data movement built on them.

mod halo;
mod rcb;
mod refine;
mod transfer;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::attributes::AttrError;
use crate::mesh::{ElemId, MeshError};
use crate::views::ElementGraph;

pub use halo::{compute_halos, HaloSpec, PartitionHalo};
pub use rcb::{rcb, rcb_points, DEFAULT_BOOTSTRAP_PARTS};
pub use refine::{refine, RefineOptions, DEFAULT_IMBALANCE, DEFAULT_PASSES};
pub use transfer::{
    build_bundles, gather, reassemble, result_schema, scatter, write_result_bundle, AttributeSource, GatherReport,
    ResultBundle, ResultRow, ResultTable, ScatterReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Bootstrap,
    Refined,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Bootstrap => "bootstrap",
            Stage::Refined => "refined",
        }
    }

    pub fn code(self) -> i64 {
        match self {
            Stage::Bootstrap => 0,
            Stage::Refined => 1,
        }
    }

    pub fn from_code(c: i64) -> Option<Self> {
        match c {
            0 => Some(Stage::Bootstrap),
            1 => Some(Stage::Refined),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("partition count {0} is not a power of two")]
    InvalidPartCount(usize),
    #[error("cannot partition an empty mesh")]
    EmptyMesh,
    #[error("graph and partition map cover different element sets")]
    GraphMeshMismatch,
    #[error("target count {target} is below the bootstrap count {boot}")]
    TargetTooSmall { target: usize, boot: usize },
    #[error("element {elem} is assigned to partition {part} of {parts}")]
    PartOutOfRange { elem: ElemId, part: u32, parts: usize },
    #[error("partition map does not cover element {0}")]
    Unassigned(ElemId),
    #[error("malformed result bundle: {0}")]
    MalformedBundle(String),
    #[error("result row (elem {elem}, sample {sample}) appears more than once")]
    DuplicateResultKey { elem: ElemId, sample: u64 },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Attribute(#[from] AttrError),
}

impl From<std::io::Error> for PartitionError {
    fn from(e: std::io::Error) -> Self {
        PartitionError::Io(e.to_string())
    }
}

/// Total assignment of elements to partitions `0..parts`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMap {
    assignment: BTreeMap<ElemId, u32>,
    parts: usize,
    stage: Stage,
    /// Bootstrap partition each partition descends from.
    ancestry: Vec<u32>,
}

impl PartitionMap {
    pub fn new(assignment: BTreeMap<ElemId, u32>, parts: usize, stage: Stage) -> Result<Self, PartitionError> {
        Self::with_ancestry(assignment, parts, stage, (0..parts as u32).collect())
    }

    pub fn with_ancestry(
        assignment: BTreeMap<ElemId, u32>,
        parts: usize,
        stage: Stage,
        ancestry: Vec<u32>,
    ) -> Result<Self, PartitionError> {
        if let Some((&elem, &part)) = assignment.iter().find(|(_, &p)| p as usize >= parts) {
            return Err(PartitionError::PartOutOfRange { elem, part, parts });
        }
        if ancestry.len() != parts {
            return Err(PartitionError::MalformedBundle(format!(
                "ancestry lists {} partitions, expected {parts}",
                ancestry.len()
            )));
        }
        Ok(Self { assignment, parts, stage, ancestry })
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn ancestry(&self) -> &[u32] {
        &self.ancestry
    }

    pub fn part_of(&self, e: ElemId) -> Option<u32> {
        self.assignment.get(&e).copied()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ElemId, u32)> + '_ {
        self.assignment.iter().map(|(&e, &p)| (e, p))
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.parts];
        for &p in self.assignment.values() {
            out[p as usize] += 1;
        }
        out
    }

    /// Refined partitions grouped by the bootstrap partition they came from.
    pub fn groups(&self) -> BTreeMap<u32, Vec<u32>> {
        let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (p, &a) in self.ancestry.iter().enumerate() {
            out.entry(a).or_default().push(p as u32);
        }
        out
    }

    fn covers_graph(&self, g: &ElementGraph) -> bool {
        g.len() == self.assignment.len() && g.ids().iter().all(|e| self.assignment.contains_key(e))
    }

    /// Dense per-node assignment in graph order.
    fn dense(&self, g: &ElementGraph) -> Result<Vec<u32>, PartitionError> {
        if !self.covers_graph(g) {
            return Err(PartitionError::GraphMeshMismatch);
        }
        Ok(g.ids().iter().map(|e| self.assignment[e]).collect())
    }
}

/// Number of graph edges whose endpoints lie in different partitions.
pub fn edge_cut(g: &ElementGraph, pm: &PartitionMap) -> Result<usize, PartitionError> {
    let dense = pm.dense(g)?;
    Ok(dense_cut(g, &dense))
}

fn dense_cut(g: &ElementGraph, part: &[u32]) -> usize {
    (0..g.len()).map(|i| g.neighbors(i).iter().filter(|&&j| j > i && part[j] != part[i]).count()).sum()
}

/// Partition sizes, imbalance and edge cut.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub stage: Stage,
    pub counts: Vec<usize>,
    /// Largest partition divided by the mean partition size.
    pub imbalance: f64,
    pub edge_cut: usize,
}

impl BalanceReport {
    pub fn new(g: &ElementGraph, pm: &PartitionMap) -> Result<Self, PartitionError> {
        let counts = pm.sizes();
        let avg = pm.len() as f64 / pm.parts() as f64;
        let max = counts.iter().copied().max().unwrap_or(0) as f64;
        Ok(Self {
            stage: pm.stage(),
            imbalance: if avg > 0.0 { max / avg } else { 0.0 },
            edge_cut: edge_cut(g, pm)?,
            counts,
        })
    }
}

impl fmt::Display for BalanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "stage={} parts={} edge_cut={} imbalance={}",
            self.stage.as_str(),
            self.counts.len(),
            self.edge_cut,
            ryu::Buffer::new().format(self.imbalance)
        )?;
        for (p, c) in self.counts.iter().enumerate() {
            writeln!(f, "part={p} elements={c}")?;
        }
        Ok(())
    }
}

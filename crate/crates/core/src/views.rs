//! The two element representations (one quadruple row per tetrahedron, or
//! four `(elem, rank, vertex)` rows) and the transforms between them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::mesh::{ElemId, Mesh, MeshError, Tetrahedron, VertexId};

/// Element count above which both representations are kept.
pub const DEFAULT_DUAL_THRESHOLD: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IncidenceRow {
    pub elem_id: ElemId,
    pub rank: u8,
    pub vertex_id: VertexId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepresentationMode {
    #[default]
    QuadrupleOnly,
    NormalizedOnly,
    Dual,
}

impl RepresentationMode {
    pub fn has_normalized(self) -> bool {
        !matches!(self, RepresentationMode::QuadrupleOnly)
    }

    pub fn has_quadruple(self) -> bool {
        !matches!(self, RepresentationMode::NormalizedOnly)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RepresentationMode::QuadrupleOnly => "quadruple",
            RepresentationMode::NormalizedOnly => "normalized",
            RepresentationMode::Dual => "dual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "quadruple" => Some(RepresentationMode::QuadrupleOnly),
            "normalized" => Some(RepresentationMode::NormalizedOnly),
            "dual" => Some(RepresentationMode::Dual),
            _ => None,
        }
    }
}

/// Chooses a representation from the element count. Small meshes get the
/// configured mode; anything above the threshold is stored both ways.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepresentationPolicy {
    pub small_mode: RepresentationMode,
    pub threshold: usize,
}

impl Default for RepresentationPolicy {
    fn default() -> Self {
        Self { small_mode: RepresentationMode::QuadrupleOnly, threshold: DEFAULT_DUAL_THRESHOLD }
    }
}

impl RepresentationPolicy {
    pub fn mode_for(&self, elements: usize) -> RepresentationMode {
        if elements > self.threshold {
            RepresentationMode::Dual
        } else {
            self.small_mode
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ViewError {
    #[error("element {0} does not cover ranks 0..=3")]
    IncompleteElement(ElemId),
    #[error("element {elem} has rank {rank} outside 0..=3")]
    MalformedRank { elem: ElemId, rank: u8 },
    #[error("element {elem} has rank {rank} more than once")]
    DuplicateRank { elem: ElemId, rank: u8 },
    #[error("element {elem} lists vertex {vertex} at two ranks")]
    RepeatedVertex { elem: ElemId, vertex: VertexId },
}

/// Materialized first-normal-form table with a secondary index on vertex.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IncidenceTable {
    rows: BTreeMap<(ElemId, u8), VertexId>,
    by_vertex: BTreeMap<VertexId, BTreeSet<ElemId>>,
}

impl IncidenceTable {
    pub fn from_elements<'a>(elements: impl IntoIterator<Item = &'a Tetrahedron>) -> Self {
        let mut t = Self::default();
        for e in elements {
            t.insert(e);
        }
        t
    }

    /// Builds the table from raw rows, enforcing the `(elem, rank)` key.
    pub fn from_rows(rows: &[IncidenceRow]) -> Result<Self, ViewError> {
        let mut t = Self::default();
        for r in rows {
            if r.rank > 3 {
                return Err(ViewError::MalformedRank { elem: r.elem_id, rank: r.rank });
            }
            if t.rows.insert((r.elem_id, r.rank), r.vertex_id).is_some() {
                return Err(ViewError::DuplicateRank { elem: r.elem_id, rank: r.rank });
            }
            t.by_vertex.entry(r.vertex_id).or_default().insert(r.elem_id);
        }
        Ok(t)
    }

    pub(crate) fn insert(&mut self, e: &Tetrahedron) {
        for (rank, v) in e.corners.iter().enumerate() {
            self.rows.insert((e.id, rank as u8), *v);
            self.by_vertex.entry(*v).or_default().insert(e.id);
        }
    }

    pub(crate) fn remove(&mut self, e: &Tetrahedron) {
        for rank in 0..4u8 {
            if let Some(v) = self.rows.remove(&(e.id, rank)) {
                if let Some(set) = self.by_vertex.get_mut(&v) {
                    set.remove(&e.id);
                    if set.is_empty() {
                        self.by_vertex.remove(&v);
                    }
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = IncidenceRow> + '_ {
        self.rows.iter().map(|(&(elem_id, rank), &vertex_id)| IncidenceRow { elem_id, rank, vertex_id })
    }

    /// Index seek on the vertex column.
    pub fn elements_with_vertex(&self, v: VertexId) -> impl Iterator<Item = ElemId> + '_ {
        self.by_vertex.get(&v).into_iter().flatten().copied()
    }

    /// Element ids whose rows differ between the two tables.
    pub fn diff(&self, other: &IncidenceTable) -> Vec<ElemId> {
        let mut out = BTreeSet::new();
        for (k, v) in &self.rows {
            if other.rows.get(k) != Some(v) {
                out.insert(k.0);
            }
        }
        for k in other.rows.keys() {
            if !self.rows.contains_key(k) {
                out.insert(k.0);
            }
        }
        out.into_iter().collect()
    }
}

/// One row per corner, rank = corner position.
pub fn to_normalized<'a>(elements: impl IntoIterator<Item = &'a Tetrahedron>) -> Vec<IncidenceRow> {
    elements
        .into_iter()
        .flat_map(|e| {
            e.corners.iter().enumerate().map(move |(rank, &vertex_id)| IncidenceRow {
                elem_id: e.id,
                rank: rank as u8,
                vertex_id,
            })
        })
        .collect()
}

/// Reassembles quadruples from incidence rows (the four-way self-join on
/// rank). Output is ordered by element id.
pub fn to_quadruple(rows: &[IncidenceRow]) -> Result<Vec<Tetrahedron>, ViewError> {
    let mut slots: BTreeMap<ElemId, [Option<VertexId>; 4]> = BTreeMap::new();
    for r in rows {
        if r.rank > 3 {
            return Err(ViewError::MalformedRank { elem: r.elem_id, rank: r.rank });
        }
        let slot = &mut slots.entry(r.elem_id).or_default()[r.rank as usize];
        if slot.is_some() {
            return Err(ViewError::DuplicateRank { elem: r.elem_id, rank: r.rank });
        }
        *slot = Some(r.vertex_id);
    }
    slots
        .into_iter()
        .map(|(id, s)| {
            let [Some(a), Some(b), Some(c), Some(d)] = s else {
                return Err(ViewError::IncompleteElement(id));
            };
            let corners = [a, b, c, d];
            for i in 0..4 {
                if corners[i + 1..].contains(&corners[i]) {
                    return Err(ViewError::RepeatedVertex { elem: id, vertex: corners[i] });
                }
            }
            Ok(Tetrahedron { id, corners })
        })
        .collect()
}

/// Elements whose corner set contains `v`, answered from the incidence
/// index when it is materialized and by a quadruple scan otherwise.
pub fn elements_sharing_vertex(m: &Mesh, v: VertexId) -> Result<BTreeSet<ElemId>, MeshError> {
    if m.vertex(v).is_none() {
        return Err(MeshError::UnknownVertex(v));
    }
    Ok(match m.incidence() {
        Some(inc) => inc.elements_with_vertex(v).collect(),
        None => scan_sharing_vertex(m, v),
    })
}

/// Full scan of the quadruple table: `v in (v0, v1, v2, v3)`.
pub fn scan_sharing_vertex(m: &Mesh, v: VertexId) -> BTreeSet<ElemId> {
    m.elements().filter(|e| e.contains_vertex(v)).map(|e| e.id).collect()
}

/// Undirected element graph; two elements are adjacent when they share a
/// face (three corners). Nodes are dense indices in element-id order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ElementGraph {
    ids: Vec<ElemId>,
    index: HashMap<ElemId, usize>,
    adj: Vec<Vec<usize>>,
}

impl ElementGraph {
    /// Builds a graph from explicit ids and edges. Self-loops and repeated
    /// edges are dropped.
    pub fn from_edges(ids: Vec<ElemId>, edges: impl IntoIterator<Item = (ElemId, ElemId)>) -> Self {
        let mut ids = ids;
        ids.sort();
        ids.dedup();
        let index: HashMap<ElemId, usize> = ids.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (a, b) in edges {
            let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) else {
                continue;
            };
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Self { ids, index, adj }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[ElemId] {
        &self.ids
    }

    pub fn index_of(&self, e: ElemId) -> Option<usize> {
        self.index.get(&e).copied()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adj[node].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Each edge once, as `(smaller, larger)` element ids.
    pub fn edges(&self) -> impl Iterator<Item = (ElemId, ElemId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(move |(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (self.ids[i], self.ids[j])))
    }
}

/// Face-sharing dual graph of the mesh.
pub fn element_adjacency_graph(m: &Mesh) -> ElementGraph {
    let mut faces: HashMap<[VertexId; 3], Vec<ElemId>> = HashMap::new();
    for e in m.elements() {
        for skip in 0..4 {
            let mut f = [VertexId(0); 3];
            let mut k = 0;
            for (i, &v) in e.corners.iter().enumerate() {
                if i != skip {
                    f[k] = v;
                    k += 1;
                }
            }
            f.sort_unstable();
            faces.entry(f).or_default().push(e.id);
        }
    }
    let mut edges = Vec::new();
    for sharing in faces.values() {
        for (i, &a) in sharing.iter().enumerate() {
            for &b in &sharing[i + 1..] {
                edges.push((a, b));
            }
        }
    }
    ElementGraph::from_edges(m.elements().map(|e| e.id).collect(), edges)
}

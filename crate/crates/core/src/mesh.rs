//! Mesh tables: vertices, tetrahedra, and the integrity constraints that
//! bind them together.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::geometry;
use crate::views::{IncidenceTable, RepresentationMode, RepresentationPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElemId(pub u64);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for ElemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vertex {
    pub fn new(id: u64, x: f64, y: f64, z: f64) -> Self {
        Self { id: VertexId(id), x, y, z }
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tetrahedron {
    pub id: ElemId,
    pub corners: [VertexId; 4],
}

impl Tetrahedron {
    pub fn new(id: u64, corners: [u64; 4]) -> Self {
        Self { id: ElemId(id), corners: corners.map(VertexId) }
    }

    pub fn has_repeated_corner(&self) -> bool {
        let c = &self.corners;
        (0..4).any(|i| (i + 1..4).any(|j| c[i] == c[j]))
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.corners.contains(&v)
    }
}

/// Permutation parity of the stored corner order relative to sorted order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> i8 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }
}

/// Order-independent identity of an element plus its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CanonicalKey {
    pub sorted: [VertexId; 4],
    pub parity: Parity,
}

/// Sorts the corner quadruple and records the parity of the permutation.
pub fn canonicalize(corners: [VertexId; 4]) -> Result<CanonicalKey, MeshError> {
    let mut sorted = corners;
    let mut swaps = 0usize;
    // insertion sort, counting transpositions
    for i in 1..4 {
        let mut j = i;
        while j > 0 && sorted[j - 1] > sorted[j] {
            sorted.swap(j - 1, j);
            swaps += 1;
            j -= 1;
        }
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(MeshError::DegenerateElement { corners });
    }
    let parity = if swaps.is_multiple_of(2) { Parity::Even } else { Parity::Odd };
    Ok(CanonicalKey { sorted, parity })
}

/// Axis-aligned bounding box of an element (a row of the cell table).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub id: ElemId,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Cell {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| self.min[a] <= p[a] && p[a] <= self.max[a])
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|a| self.min[a] < self.max[a])
    }

    pub fn diagonal(&self) -> f64 {
        let d: f64 = (0..3).map(|a| (self.max[a] - self.min[a]).powi(2)).sum();
        d.sqrt()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("vertex {0} already exists")]
    DuplicateVertex(VertexId),
    #[error("element {0} already exists")]
    DuplicateElementId(ElemId),
    #[error("identifier 0 is not a valid id")]
    InvalidId,
    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteCoordinate(VertexId),
    #[error("element {elem} references missing vertex {vertex}")]
    DanglingVertex { elem: ElemId, vertex: VertexId },
    #[error("element corners {corners:?} repeat a vertex")]
    DegenerateElement { corners: [VertexId; 4] },
    #[error("element {elem} duplicates element {existing} (same corner set)")]
    DuplicateElement { elem: ElemId, existing: ElemId },
    #[error("element {0} has an axis-degenerate bounding box")]
    FlatBox(ElemId),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown element {0}")]
    UnknownElement(ElemId),
    #[error("element {0} has zero volume")]
    ZeroVolume(ElemId),
    #[error("normalized and quadruple representations diverge on elements {0:?}")]
    Divergence(Vec<ElemId>),
}

/// One integrity finding from [`Mesh::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidVertexId,
    DuplicateVertexId { vertex: VertexId },
    NonFiniteCoordinate { vertex: VertexId },
    InvalidElementId { elem: ElemId },
    DuplicateElementId { elem: ElemId },
    DanglingVertex { elem: ElemId, vertex: VertexId },
    RepeatedCorner { elem: ElemId },
    DuplicateElement { elem: ElemId, existing: ElemId },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::InvalidVertexId => "invalid-vertex-id",
            Violation::DuplicateVertexId { .. } => "duplicate-vertex-id",
            Violation::DuplicateElementId { .. } => "duplicate-element-id",
            Violation::NonFiniteCoordinate { .. } => "non-finite-coordinate",
            Violation::InvalidElementId { .. } => "invalid-element-id",
            Violation::DanglingVertex { .. } => "dangling-vertex",
            Violation::RepeatedCorner { .. } => "degenerate-element",
            Violation::DuplicateElement { .. } => "duplicate-element",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={}", self.kind())?;
        match self {
            Violation::InvalidVertexId => Ok(()),
            Violation::NonFiniteCoordinate { vertex } | Violation::DuplicateVertexId { vertex } => {
                write!(f, " vertex={vertex}")
            }
            Violation::InvalidElementId { elem }
            | Violation::RepeatedCorner { elem }
            | Violation::DuplicateElementId { elem } => {
                write!(f, " elem={elem}")
            }
            Violation::DanglingVertex { elem, vertex } => {
                write!(f, " elem={elem} vertex={vertex}")
            }
            Violation::DuplicateElement { elem, existing } => {
                write!(f, " elem={elem} existing={existing}")
            }
        }
    }
}

/// Result of a full integrity check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Elements whose corners are (nearly) coplanar. Reported separately
    /// because they pass every combinatorial constraint.
    pub zero_volume: Vec<ElemId>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Incremental checker shared by [`Mesh::validate`] and the deferred bulk
/// loader, so both apply the same predicate in their own row order.
#[derive(Debug, Default)]
pub struct ElementChecker {
    seen: HashMap<[VertexId; 4], ElemId>,
}

impl ElementChecker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Checks `t` against the vertex table and every element checked before
    /// it. The first element carrying a given corner set owns it.
    pub fn check(&mut self, vertices: &BTreeMap<VertexId, Vertex>, t: &Tetrahedron) -> Vec<Violation> {
        let mut out = Vec::new();
        if t.id.0 == 0 {
            out.push(Violation::InvalidElementId { elem: t.id });
        }
        for v in t.corners {
            if !vertices.contains_key(&v)
                && !out.iter().any(|o| matches!(o, Violation::DanglingVertex { vertex, .. } if *vertex == v))
            {
                out.push(Violation::DanglingVertex { elem: t.id, vertex: v });
            }
        }
        match canonicalize(t.corners) {
            Err(_) => out.push(Violation::RepeatedCorner { elem: t.id }),
            Ok(key) => match self.seen.get(&key.sorted) {
                Some(&existing) if existing != t.id => out.push(Violation::DuplicateElement { elem: t.id, existing }),
                Some(_) => {}
                None => {
                    self.seen.insert(key.sorted, t.id);
                }
            },
        }
        out
    }
}

/// Checks a single vertex row.
pub fn check_vertex(v: &Vertex) -> Vec<Violation> {
    let mut out = Vec::new();
    if v.id.0 == 0 {
        out.push(Violation::InvalidVertexId);
    }
    if !v.is_finite() {
        out.push(Violation::NonFiniteCoordinate { vertex: v.id });
    }
    out
}

/// A tetrahedral mesh with enforced integrity constraints.
///
/// The quadruple table is always held in memory. The normalized incidence
/// table is materialized alongside it whenever the representation mode asks
/// for it, and is kept in step on every mutation.
#[derive(Debug, Clone, Default)]
pub struct Mesh {
    vertices: BTreeMap<VertexId, Vertex>,
    elements: BTreeMap<ElemId, Tetrahedron>,
    keys: HashMap<[VertexId; 4], Vec<ElemId>>,
    incidence: Option<IncidenceTable>,
    mode: RepresentationMode,
}

impl Mesh {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_mode(mode: RepresentationMode) -> Self {
        let mut m = Self::new();
        m.set_mode(mode);
        m
    }

    pub fn mode(&self) -> RepresentationMode {
        self.mode
    }

    /// Switches representation, materializing or dropping the incidence
    /// table as needed.
    pub fn set_mode(&mut self, mode: RepresentationMode) {
        self.mode = mode;
        if mode.has_normalized() {
            if self.incidence.is_none() {
                self.incidence = Some(IncidenceTable::from_elements(self.elements.values()));
            }
        } else {
            self.incidence = None;
        }
    }

    /// Applies a size-based policy once, at load or creation time.
    pub fn apply_policy(&mut self, policy: &RepresentationPolicy) {
        self.set_mode(policy.mode_for(self.elements.len()));
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.get(&id)
    }

    pub fn element(&self, id: ElemId) -> Option<&Tetrahedron> {
        self.elements.get(&id)
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = &Vertex> + '_ {
        self.vertices.values()
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &Tetrahedron> + '_ {
        self.elements.values()
    }

    pub fn vertex_table(&self) -> &BTreeMap<VertexId, Vertex> {
        &self.vertices
    }

    pub fn incidence(&self) -> Option<&IncidenceTable> {
        self.incidence.as_ref()
    }

    pub fn add_vertex(&mut self, v: Vertex) -> Result<(), MeshError> {
        if v.id.0 == 0 {
            return Err(MeshError::InvalidId);
        }
        if self.vertices.contains_key(&v.id) {
            return Err(MeshError::DuplicateVertex(v.id));
        }
        if !v.is_finite() {
            return Err(MeshError::NonFiniteCoordinate(v.id));
        }
        self.vertices.insert(v.id, v);
        Ok(())
    }

    pub fn add_tetrahedron(&mut self, id: ElemId, corners: [VertexId; 4]) -> Result<(), MeshError> {
        if id.0 == 0 {
            return Err(MeshError::InvalidId);
        }
        if self.elements.contains_key(&id) {
            return Err(MeshError::DuplicateElementId(id));
        }
        if let Some(&vertex) = corners.iter().find(|v| !self.vertices.contains_key(v)) {
            return Err(MeshError::DanglingVertex { elem: id, vertex });
        }
        let key = canonicalize(corners)?;
        if let Some(&existing) = self.keys.get(&key.sorted).and_then(|ids| ids.first()) {
            return Err(MeshError::DuplicateElement { elem: id, existing });
        }
        self.keys.entry(key.sorted).or_default().push(id);
        self.insert_element(Tetrahedron { id, corners });
        Ok(())
    }

    /// Inserts a vertex without constraint checks other than primary-key
    /// uniqueness. Used by deferred bulk loading; run [`Mesh::validate`]
    /// afterwards.
    pub fn insert_vertex_unchecked(&mut self, v: Vertex) -> Result<(), MeshError> {
        if self.vertices.contains_key(&v.id) {
            return Err(MeshError::DuplicateVertex(v.id));
        }
        self.vertices.insert(v.id, v);
        Ok(())
    }

    /// Element counterpart of [`Mesh::insert_vertex_unchecked`].
    pub fn insert_element_unchecked(&mut self, t: Tetrahedron) -> Result<(), MeshError> {
        if self.elements.contains_key(&t.id) {
            return Err(MeshError::DuplicateElementId(t.id));
        }
        if let Ok(key) = canonicalize(t.corners) {
            self.keys.entry(key.sorted).or_default().push(t.id);
        }
        self.insert_element(t);
        Ok(())
    }

    fn insert_element(&mut self, t: Tetrahedron) {
        if let Some(inc) = self.incidence.as_mut() {
            inc.insert(&t);
        }
        self.elements.insert(t.id, t);
    }

    pub fn remove_element(&mut self, id: ElemId) -> Result<Tetrahedron, MeshError> {
        let t = self.elements.remove(&id).ok_or(MeshError::UnknownElement(id))?;
        if let Ok(key) = canonicalize(t.corners) {
            if let Some(ids) = self.keys.get_mut(&key.sorted) {
                ids.retain(|&e| e != id);
                if ids.is_empty() {
                    self.keys.remove(&key.sorted);
                }
            }
        }
        if let Some(inc) = self.incidence.as_mut() {
            inc.remove(&t);
        }
        Ok(t)
    }

    /// Removes a vertex. Elements still referencing it are left in place and
    /// will show up as dangling references in [`Mesh::validate`].
    pub fn remove_vertex(&mut self, id: VertexId) -> Result<Vertex, MeshError> {
        self.vertices.remove(&id).ok_or(MeshError::UnknownVertex(id))
    }

    pub fn signed_volume(&self, id: ElemId) -> Result<f64, MeshError> {
        let t = self.element(id).ok_or(MeshError::UnknownElement(id))?;
        Ok(geometry::signed_volume(&self.corner_coords(t)?))
    }

    pub fn bounding_box(&self, id: ElemId) -> Result<Cell, MeshError> {
        let t = self.element(id).ok_or(MeshError::UnknownElement(id))?;
        let (min, max) = geometry::bounds(&self.corner_coords(t)?);
        let cell = Cell { id, min, max };
        if !cell.is_valid() {
            return Err(MeshError::FlatBox(id));
        }
        Ok(cell)
    }

    pub fn centroid(&self, id: ElemId) -> Result<[f64; 3], MeshError> {
        let t = self.element(id).ok_or(MeshError::UnknownElement(id))?;
        Ok(geometry::centroid(&self.corner_coords(t)?))
    }

    pub fn corner_coords(&self, t: &Tetrahedron) -> Result<[[f64; 3]; 4], MeshError> {
        let mut out = [[0.0; 3]; 4];
        for (slot, v) in out.iter_mut().zip(t.corners) {
            *slot = self.vertices.get(&v).ok_or(MeshError::DanglingVertex { elem: t.id, vertex: v })?.coords();
        }
        Ok(out)
    }

    /// Lists every foreign-key, uniqueness and degeneracy violation, plus
    /// geometrically flat elements as a separate warning list.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for v in self.vertices.values() {
            report.violations.extend(check_vertex(v));
        }
        let mut checker = ElementChecker::new();
        for t in self.elements.values() {
            report.violations.extend(checker.check(&self.vertices, t));
            if let Ok(c) = self.corner_coords(t) {
                if geometry::is_flat(&c) {
                    report.zero_volume.push(t.id);
                }
            }
        }
        report
    }

    /// Replaces the materialized incidence table, e.g. with one read back
    /// from disk. Call [`Mesh::sync_representations`] to check it.
    pub fn replace_incidence(&mut self, table: IncidenceTable) {
        self.incidence = Some(table);
        if !self.mode.has_normalized() {
            self.mode = RepresentationMode::Dual;
        }
    }

    /// Rebuilds the normalized table from the quadruple table. If the two
    /// disagreed beforehand the table is still rebuilt, and the offending
    /// element ids are returned as [`MeshError::Divergence`].
    pub fn sync_representations(&mut self) -> Result<(), MeshError> {
        if !self.mode.has_normalized() {
            return Ok(());
        }
        let fresh = IncidenceTable::from_elements(self.elements.values());
        let diverged = match &self.incidence {
            Some(current) => current.diff(&fresh),
            None => Vec::new(),
        };
        self.incidence = Some(fresh);
        if diverged.is_empty() {
            Ok(())
        } else {
            Err(MeshError::Divergence(diverged))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_mesh() -> Mesh {
        let mut m = Mesh::new();
        m.add_vertex(Vertex::new(1, 0.0, 0.0, 0.0)).unwrap();
        m.add_vertex(Vertex::new(2, 1.0, 0.0, 0.0)).unwrap();
        m.add_vertex(Vertex::new(3, 0.0, 1.0, 0.0)).unwrap();
        m.add_vertex(Vertex::new(4, 0.0, 0.0, 1.0)).unwrap();
        m
    }

    fn ids(c: [u64; 4]) -> [VertexId; 4] {
        c.map(VertexId)
    }

    #[test]
    fn add_vertex_cases() {
        let mut m = Mesh::new();
        m.add_vertex(Vertex::new(1, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(m.vertex_count(), 1);
        assert_eq!(m.add_vertex(Vertex::new(1, 1.0, 0.0, 0.0)), Err(MeshError::DuplicateVertex(VertexId(1))));
        assert_eq!(m.add_vertex(Vertex::new(2, f64::NAN, 0.0, 0.0)), Err(MeshError::NonFiniteCoordinate(VertexId(2))));
        assert_eq!(m.add_vertex(Vertex::new(0, 0.0, 0.0, 0.0)), Err(MeshError::InvalidId));
    }

    #[test]
    fn add_tetrahedron_cases() {
        let mut m = unit_mesh();
        m.add_tetrahedron(ElemId(1), ids([1, 2, 3, 4])).unwrap();
        assert_eq!(
            m.add_tetrahedron(ElemId(2), ids([2, 1, 3, 4])),
            Err(MeshError::DuplicateElement { elem: ElemId(2), existing: ElemId(1) })
        );
        assert!(matches!(m.add_tetrahedron(ElemId(3), ids([1, 1, 2, 3])), Err(MeshError::DegenerateElement { .. })));
        assert_eq!(
            m.add_tetrahedron(ElemId(4), ids([1, 2, 3, 999])),
            Err(MeshError::DanglingVertex { elem: ElemId(4), vertex: VertexId(999) })
        );
        assert_eq!(m.element_count(), 1);
    }

    fn inversions(c: [u64; 4]) -> usize {
        (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).filter(|&(i, j)| c[i] > c[j]).count()
    }

    #[test]
    fn canonicalize_examples() {
        let k = canonicalize(ids([1, 2, 3, 4])).unwrap();
        assert_eq!(k.sorted, ids([1, 2, 3, 4]));
        assert_eq!(k.parity, Parity::Even);
        let k = canonicalize(ids([2, 1, 3, 4])).unwrap();
        assert_eq!(k.parity, Parity::Odd);
        // (4,2,3,1): inversions 4>2,4>3,4>1,2>1,3>1 = 5 -> odd
        assert_eq!(inversions([4, 2, 3, 1]), 5);
        let k = canonicalize(ids([4, 2, 3, 1])).unwrap();
        assert_eq!(k.sorted, ids([1, 2, 3, 4]));
        assert_eq!(k.parity, Parity::Odd);
        assert!(canonicalize(ids([5, 6, 5, 7])).is_err());
    }

    #[test]
    fn parity_matches_inversion_count_for_all_permutations() {
        let base = [3u64, 8, 11, 20];
        for p in permutations() {
            let c = p.map(|i| base[i]);
            let k = canonicalize(ids(c)).unwrap();
            let expected = if inversions(c).is_multiple_of(2) { Parity::Even } else { Parity::Odd };
            assert_eq!(k.parity, expected, "{c:?}");
            assert_eq!(k.sorted, ids(base));
        }
    }

    pub(crate) fn permutations() -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let p = [a, b, c, d];
                        if (0..4).all(|i| p.contains(&i)) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn signed_volume_examples() {
        let mut m = unit_mesh();
        m.add_vertex(Vertex::new(5, 1.0, 1.0, 0.0)).unwrap();
        m.add_tetrahedron(ElemId(1), ids([1, 2, 3, 4])).unwrap();
        m.add_tetrahedron(ElemId(2), ids([2, 1, 3, 5])).unwrap();
        assert!((m.signed_volume(ElemId(1)).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        // 1,2,3,5 are coplanar (z = 0)
        assert_eq!(m.signed_volume(ElemId(2)).unwrap(), 0.0);

        let mut swapped = unit_mesh();
        swapped.add_tetrahedron(ElemId(1), ids([2, 1, 3, 4])).unwrap();
        assert!((swapped.signed_volume(ElemId(1)).unwrap() + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn signed_volume_sign_follows_parity() {
        let base = [1u64, 2, 3, 4];
        let (mut pos, mut neg) = (0, 0);
        for (i, p) in permutations().into_iter().enumerate() {
            let mut m = unit_mesh();
            let c = p.map(|i| base[i]);
            m.add_tetrahedron(ElemId(i as u64 + 1), ids(c)).unwrap();
            let v = m.signed_volume(ElemId(i as u64 + 1)).unwrap();
            let parity = canonicalize(ids(c)).unwrap().parity;
            assert!((v.abs() - 1.0 / 6.0).abs() < 1e-15);
            assert_eq!(v > 0.0, parity == Parity::Even);
            if v > 0.0 {
                pos += 1
            } else {
                neg += 1
            }
        }
        assert_eq!((pos, neg), (12, 12));
    }

    #[test]
    fn bounding_box_examples() {
        let mut m = unit_mesh();
        m.add_tetrahedron(ElemId(1), ids([1, 2, 3, 4])).unwrap();
        let c = m.bounding_box(ElemId(1)).unwrap();
        assert_eq!((c.min, c.max), ([0.0; 3], [1.0; 3]));

        let mut t = Mesh::new();
        for v in unit_mesh().vertices() {
            t.add_vertex(Vertex::new(v.id.0, v.x + 10.0, v.y, v.z)).unwrap();
        }
        t.add_tetrahedron(ElemId(1), ids([1, 2, 3, 4])).unwrap();
        let c = t.bounding_box(ElemId(1)).unwrap();
        assert_eq!((c.min, c.max), ([10.0, 0.0, 0.0], [11.0, 1.0, 1.0]));

        let mut flat = Mesh::new();
        for (i, (x, y)) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)].into_iter().enumerate() {
            flat.add_vertex(Vertex::new(i as u64 + 1, x, y, 2.0)).unwrap();
        }
        flat.add_tetrahedron(ElemId(1), ids([1, 2, 3, 4])).unwrap();
        assert_eq!(flat.bounding_box(ElemId(1)), Err(MeshError::FlatBox(ElemId(1))));
        assert_eq!(flat.validate().zero_volume, vec![ElemId(1)]);
        assert!(flat.validate().is_clean());
    }

    #[test]
    fn validate_reports_each_violation() {
        let mut m = unit_mesh();
        m.add_tetrahedron(ElemId(1), ids([1, 2, 3, 4])).unwrap();
        assert!(m.validate().is_clean());

        m.insert_element_unchecked(Tetrahedron::new(2, [4, 3, 2, 1])).unwrap();
        m.insert_element_unchecked(Tetrahedron::new(3, [1, 2, 3, 999])).unwrap();
        m.insert_element_unchecked(Tetrahedron::new(4, [1, 1, 2, 3])).unwrap();
        let r = m.validate();
        assert_eq!(
            r.violations,
            vec![
                Violation::DuplicateElement { elem: ElemId(2), existing: ElemId(1) },
                Violation::DanglingVertex { elem: ElemId(3), vertex: VertexId(999) },
                Violation::RepeatedCorner { elem: ElemId(4) },
            ]
        );
    }

    #[test]
    fn remove_element_frees_canonical_key() {
        let mut m = unit_mesh();
        m.add_tetrahedron(ElemId(1), ids([1, 2, 3, 4])).unwrap();
        m.remove_element(ElemId(1)).unwrap();
        m.add_tetrahedron(ElemId(2), ids([4, 3, 2, 1])).unwrap();
        assert_eq!(m.element_count(), 1);
    }
}

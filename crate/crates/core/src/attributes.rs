//! Attribute definition, assignment to model topology, and resolution onto
//! mesh entities through the topology hierarchy.
//!
//! Model topology is a small graph of regions, faces, edges and vertices
//! with downward boundary links (region to its faces, face to its edges,
//! edge to its end vertices). Mesh elements and vertices are *classified*
//! onto one topology entity each. An attribute lookup starts at that
//! entity and walks upward (vertex to the edges it bounds, edge to faces,
//! face to regions) one level at a time; the nearest eligible binding wins,
//! and two eligible bindings at the same distance are an error.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::mesh::{ElemId, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TopoKind {
    Vertex,
    Edge,
    Face,
    Region,
}

impl TopoKind {
    pub const ALL: [TopoKind; 4] = [TopoKind::Vertex, TopoKind::Edge, TopoKind::Face, TopoKind::Region];

    /// Kind of the entities on this kind's boundary.
    pub fn boundary_kind(self) -> Option<TopoKind> {
        match self {
            TopoKind::Vertex => None,
            TopoKind::Edge => Some(TopoKind::Vertex),
            TopoKind::Face => Some(TopoKind::Edge),
            TopoKind::Region => Some(TopoKind::Face),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TopoKind::Vertex => "vertex",
            TopoKind::Edge => "edge",
            TopoKind::Face => "face",
            TopoKind::Region => "region",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn code(self) -> i64 {
        self as i64
    }

    pub fn from_code(c: i64) -> Option<Self> {
        Self::ALL.get(usize::try_from(c).ok()?).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopoRef {
    pub kind: TopoKind,
    pub id: u64,
}

impl TopoRef {
    pub fn new(kind: TopoKind, id: u64) -> Self {
        Self { kind, id }
    }
}

impl fmt::Display for TopoRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeshEntity {
    Element(ElemId),
    Vertex(VertexId),
}

impl MeshEntity {
    /// Topological dimension of the mesh entity, expressed as a kind.
    pub fn kind(self) -> TopoKind {
        match self {
            MeshEntity::Element(_) => TopoKind::Region,
            MeshEntity::Vertex(_) => TopoKind::Vertex,
        }
    }
}

impl fmt::Display for MeshEntity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshEntity::Element(e) => write!(f, "elem:{e}"),
            MeshEntity::Vertex(v) => write!(f, "vertex:{v}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttrError {
    #[error("unknown topology entity {0}")]
    UnknownEntity(TopoRef),
    #[error("topology entity {0} already exists")]
    DuplicateEntity(TopoRef),
    #[error("{entity} cannot be bounded by {boundary}")]
    InvalidBoundary { entity: TopoRef, boundary: TopoRef },
    #[error("attribute {name} is already assigned on {entity}")]
    DuplicateName { entity: TopoRef, name: String },
    #[error("attribute value is not finite")]
    NonFiniteValue,
    #[error("attribute scope is empty")]
    EmptyScope,
    #[error("elements can only be classified onto regions, not {0}")]
    InvalidClassification(TopoRef),
    #[error("{0} is not classified")]
    Unclassified(MeshEntity),
    #[error("attribute {name} not found for {entity}")]
    NotFound { entity: MeshEntity, name: String },
    #[error("attribute {name} for {entity} is ambiguous between {candidates:?}")]
    Ambiguous { entity: MeshEntity, name: String, candidates: Vec<TopoRef> },
}

/// Model topology with boundary links in both directions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Topology {
    down: BTreeMap<TopoRef, Vec<TopoRef>>,
    up: BTreeMap<TopoRef, Vec<TopoRef>>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entity bounded by existing entities of the next-lower kind.
    pub fn add_entity(&mut self, e: TopoRef, boundary: &[u64]) -> Result<(), AttrError> {
        if self.down.contains_key(&e) {
            return Err(AttrError::DuplicateEntity(e));
        }
        let mut links = Vec::with_capacity(boundary.len());
        for &id in boundary {
            let b = match e.kind.boundary_kind() {
                Some(kind) => TopoRef::new(kind, id),
                None => return Err(AttrError::InvalidBoundary { entity: e, boundary: TopoRef::new(e.kind, id) }),
            };
            if !self.down.contains_key(&b) {
                return Err(AttrError::UnknownEntity(b));
            }
            links.push(b);
        }
        links.sort();
        links.dedup();
        for &b in &links {
            self.up.entry(b).or_default().push(e);
        }
        self.down.insert(e, links);
        Ok(())
    }

    pub fn contains(&self, e: TopoRef) -> bool {
        self.down.contains_key(&e)
    }

    pub fn boundary(&self, e: TopoRef) -> &[TopoRef] {
        self.down.get(&e).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Entities whose boundary includes `e`.
    pub fn bounded_by(&self, e: TopoRef) -> &[TopoRef] {
        self.up.get(&e).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entities(&self) -> impl Iterator<Item = TopoRef> + '_ {
        self.down.keys().copied()
    }

    /// `e` followed by successively farther upward neighbours, grouped by
    /// distance.
    pub fn upward_levels(&self, e: TopoRef) -> Vec<Vec<TopoRef>> {
        let mut levels = vec![vec![e]];
        let mut seen = BTreeSet::from([e]);
        loop {
            let next: BTreeSet<TopoRef> = levels
                .last()
                .into_iter()
                .flatten()
                .flat_map(|&x| self.bounded_by(x).iter().copied())
                .filter(|x| !seen.contains(x))
                .collect();
            if next.is_empty() {
                return levels;
            }
            seen.extend(next.iter().copied());
            levels.push(next.into_iter().collect());
        }
    }
}

/// Mesh entity to topology entity map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Classification {
    map: BTreeMap<MeshEntity, TopoRef>,
}

impl Classification {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn classify(&mut self, topo: &Topology, entity: MeshEntity, target: TopoRef) -> Result<(), AttrError> {
        if !topo.contains(target) {
            return Err(AttrError::UnknownEntity(target));
        }
        if matches!(entity, MeshEntity::Element(_)) && target.kind != TopoKind::Region {
            return Err(AttrError::InvalidClassification(target));
        }
        self.map.insert(entity, target);
        Ok(())
    }

    pub fn target(&self, entity: MeshEntity) -> Option<TopoRef> {
        self.map.get(&entity).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MeshEntity, TopoRef)> + '_ {
        self.map.iter().map(|(&m, &t)| (m, t))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Scalar(f64),
    Vector(Vec<f64>),
    /// Equation-valued attribute, carried verbatim and never evaluated.
    Expression(String),
}

impl AttrValue {
    pub fn is_finite(&self) -> bool {
        match self {
            AttrValue::Scalar(v) => v.is_finite(),
            AttrValue::Vector(v) => v.iter().all(|x| x.is_finite()),
            AttrValue::Expression(_) => true,
        }
    }
}

/// Reference frame an attribute value is expressed in. Descriptive only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoordSystem {
    #[default]
    Cartesian,
    Cylindrical,
    Spherical,
}

impl CoordSystem {
    pub fn as_str(self) -> &'static str {
        match self {
            CoordSystem::Cartesian => "cartesian",
            CoordSystem::Cylindrical => "cylindrical",
            CoordSystem::Spherical => "spherical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [CoordSystem::Cartesian, CoordSystem::Cylindrical, CoordSystem::Spherical].into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeBinding {
    pub name: String,
    pub value: AttrValue,
    pub context: CoordSystem,
    /// Kinds this binding applies to during resolution.
    pub scope: BTreeSet<TopoKind>,
    pub group: Option<u32>,
    pub time_dependent: bool,
    /// Optional `(time, value)` samples for time-dependent attributes.
    pub samples: Vec<(f64, AttrValue)>,
}

impl AttributeBinding {
    pub fn new(name: impl Into<String>, value: AttrValue, scope: impl IntoIterator<Item = TopoKind>) -> Self {
        Self {
            name: name.into(),
            value,
            context: CoordSystem::Cartesian,
            scope: scope.into_iter().collect(),
            group: None,
            time_dependent: false,
            samples: Vec::new(),
        }
    }

    pub fn scalar(name: impl Into<String>, v: f64, scope: impl IntoIterator<Item = TopoKind>) -> Self {
        Self::new(name, AttrValue::Scalar(v), scope)
    }

    pub fn with_context(mut self, context: CoordSystem) -> Self {
        self.context = context;
        self
    }

    pub fn with_group(mut self, group: u32) -> Self {
        self.group = Some(group);
        self
    }

    fn applies_to(&self, entity: MeshEntity, target: TopoRef) -> bool {
        self.scope.contains(&entity.kind()) || self.scope.contains(&target.kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedAttribute {
    pub name: String,
    pub value: AttrValue,
    pub context: CoordSystem,
    /// Topology entity the value was taken from.
    pub provenance: TopoRef,
    /// Upward hops from the classification target to the provenance.
    pub distance: usize,
}

/// Outcome of resolving many elements at once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResolveAllReport {
    pub table: BTreeMap<ElemId, Vec<ResolvedAttribute>>,
    pub failures: Vec<(ElemId, AttrError)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttributeStore {
    bindings: BTreeMap<(TopoRef, String), AttributeBinding>,
    groups: BTreeMap<u32, String>,
}

impl AttributeStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, topo: &Topology, entity: TopoRef, binding: AttributeBinding) -> Result<(), AttrError> {
        if !topo.contains(entity) {
            return Err(AttrError::UnknownEntity(entity));
        }
        if binding.scope.is_empty() {
            return Err(AttrError::EmptyScope);
        }
        if !binding.value.is_finite() || binding.samples.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(AttrError::NonFiniteValue);
        }
        let key = (entity, binding.name.clone());
        if self.bindings.contains_key(&key) {
            return Err(AttrError::DuplicateName { entity, name: binding.name });
        }
        self.bindings.insert(key, binding);
        Ok(())
    }

    pub fn get(&self, entity: TopoRef, name: &str) -> Option<&AttributeBinding> {
        self.bindings.get(&(entity, name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (TopoRef, &AttributeBinding)> + '_ {
        self.bindings.iter().map(|((e, _), b)| (*e, b))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn define_group(&mut self, id: u32, label: impl Into<String>) {
        self.groups.insert(id, label.into());
    }

    pub fn groups(&self) -> &BTreeMap<u32, String> {
        &self.groups
    }

    /// Bindings sharing a group id.
    pub fn group_members(&self, group: u32) -> impl Iterator<Item = (TopoRef, &AttributeBinding)> + '_ {
        self.iter().filter(move |(_, b)| b.group == Some(group))
    }

    /// Names that can apply to mesh elements (some binding scopes regions).
    pub fn element_attribute_names(&self) -> Vec<String> {
        let names: BTreeSet<&String> =
            self.bindings.values().filter(|b| b.scope.contains(&TopoKind::Region)).map(|b| &b.name).collect();
        names.into_iter().cloned().collect()
    }

    pub fn resolve(
        &self,
        entity: MeshEntity,
        name: &str,
        cls: &Classification,
        topo: &Topology,
    ) -> Result<ResolvedAttribute, AttrError> {
        let target = cls.target(entity).ok_or(AttrError::Unclassified(entity))?;
        for (distance, level) in topo.upward_levels(target).into_iter().enumerate() {
            let hits: Vec<(TopoRef, &AttributeBinding)> = level
                .iter()
                .filter_map(|&t| self.get(t, name).map(|b| (t, b)))
                .filter(|(_, b)| b.applies_to(entity, target))
                .collect();
            match hits.as_slice() {
                [] => continue,
                [(t, b)] => {
                    return Ok(ResolvedAttribute {
                        name: b.name.clone(),
                        value: b.value.clone(),
                        context: b.context,
                        provenance: *t,
                        distance,
                    })
                }
                many => {
                    return Err(AttrError::Ambiguous {
                        entity,
                        name: name.to_string(),
                        candidates: many.iter().map(|(t, _)| *t).collect(),
                    })
                }
            }
        }
        Err(AttrError::NotFound { entity, name: name.to_string() })
    }

    /// Resolves every element-applicable attribute (or just `names`) for
    /// each element. Failures are collected rather than aborting.
    pub fn resolve_all(
        &self,
        elements: impl IntoIterator<Item = ElemId>,
        names: Option<&[String]>,
        cls: &Classification,
        topo: &Topology,
    ) -> ResolveAllReport {
        let owned_names;
        let names = match names {
            Some(n) => n,
            None => {
                owned_names = self.element_attribute_names();
                &owned_names
            }
        };
        let mut report = ResolveAllReport::default();
        for e in elements {
            let row = report.table.entry(e).or_default();
            for name in names {
                match self.resolve(MeshEntity::Element(e), name, cls, topo) {
                    Ok(r) => row.push(r),
                    Err(err) => report.failures.push((e, err)),
                }
            }
        }
        report
    }
}

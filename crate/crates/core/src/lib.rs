//! Storage, indexing, partitioning and bulk I/O for unstructured
//! tetrahedral finite-element meshes, organized around a relational model:
//! constrained vertex and element tables, a normalized incidence view,
//! bounding-box cell tables with an interval index, Morton surrogate keys,
//! bisection partitioning with halo-aware scatter and gather, and
//! inheritance-based attribute resolution.

pub mod attributes;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod partition;
pub mod spatial;
pub mod views;

pub use mesh::{canonicalize, CanonicalKey, Cell, ElemId, Mesh, MeshError, Parity, Tetrahedron, Vertex, VertexId};

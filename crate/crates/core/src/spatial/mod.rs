//! Point-in-cell queries over element bounding boxes.
//!
//! A query first narrows candidates with the cell table (either a full scan
//! or a seek on the composite interval index) and then runs an exact
//! barycentric containment test on the few survivors.

mod interval;
mod locate;
mod morton;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::mesh::{Cell, ElemId, Mesh, MeshError};

pub use interval::IntervalIndex;
pub use locate::{barycentric, point_locate, BarycentricCoords, INSIDE_TOLERANCE};
pub use morton::{MortonGrid, MortonKey, DEFAULT_BITS, MAX_BITS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl QueryPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }
}

impl From<[f64; 3]> for QueryPoint {
    fn from(p: [f64; 3]) -> Self {
        Self::new(p[0], p[1], p[2])
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("index has {index} entries but the cell table has {cells}")]
    StaleIndex { index: usize, cells: usize },
    #[error("point ({0}, {1}, {2}) lies outside the quantization frame")]
    OutOfFrame(f64, f64, f64),
    #[error("query point has a non-finite coordinate")]
    NonFinitePoint,
    #[error("cell {0} is not a valid box")]
    InvalidCell(ElemId),
    #[error("{0} bits per axis is not supported (1..={max})", max = MAX_BITS)]
    InvalidBits(u32),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Bounding-box table keyed by element id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellTable {
    cells: BTreeMap<ElemId, Cell>,
}

impl CellTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, cell: Cell) -> Result<(), SpatialError> {
        if !cell.is_valid() {
            return Err(SpatialError::InvalidCell(cell.id));
        }
        self.cells.insert(cell.id, cell);
        Ok(())
    }

    pub fn remove(&mut self, id: ElemId) -> Option<Cell> {
        self.cells.remove(&id)
    }

    pub fn get(&self, id: ElemId) -> Option<&Cell> {
        self.cells.get(&id)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Cell> + '_ {
        self.cells.values()
    }

    /// Union of all boxes, or `None` for an empty table.
    pub fn extent(&self) -> Option<([f64; 3], [f64; 3])> {
        let mut it = self.cells.values();
        let first = it.next()?;
        let (mut lo, mut hi) = (first.min, first.max);
        for c in it {
            for a in 0..3 {
                lo[a] = lo[a].min(c.min[a]);
                hi[a] = hi[a].max(c.max[a]);
            }
        }
        Some((lo, hi))
    }
}

impl FromIterator<Cell> for CellTable {
    fn from_iter<T: IntoIterator<Item = Cell>>(iter: T) -> Self {
        Self { cells: iter.into_iter().map(|c| (c.id, c)).collect() }
    }
}

/// One bounding box per element.
pub fn build_cell_table(m: &Mesh) -> Result<CellTable, MeshError> {
    m.elements().map(|e| m.bounding_box(e.id)).collect()
}

/// Full table scan with inclusive bounds on every axis.
pub fn point_in_box_scan(p: QueryPoint, cells: &CellTable) -> Vec<ElemId> {
    let q = p.coords();
    cells.iter().filter(|c| c.contains(q)).map(|c| c.id).collect()
}

/// Index seek plus residual filter; same answer as [`point_in_box_scan`].
pub fn point_in_box_indexed(
    p: QueryPoint,
    idx: &IntervalIndex,
    cells: &CellTable,
) -> Result<Vec<ElemId>, SpatialError> {
    idx.check_fresh(cells)?;
    Ok(idx.query(p, cells))
}

/// Everything needed to answer point queries against one mesh snapshot.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    pub cells: CellTable,
    pub index: IntervalIndex,
    pub grid: Option<MortonGrid>,
    /// Morton key of each element centroid, sorted by key.
    pub keys: Vec<(MortonKey, ElemId)>,
}

impl SpatialIndex {
    pub fn build(m: &Mesh, bits: u32) -> Result<Self, SpatialError> {
        let cells = build_cell_table(m)?;
        Self::from_cells(m, cells, bits)
    }

    pub fn from_cells(m: &Mesh, cells: CellTable, bits: u32) -> Result<Self, SpatialError> {
        let index = IntervalIndex::build(&cells);
        let grid = match cells.extent() {
            Some((lo, hi)) => Some(MortonGrid::covering(lo, hi, bits)?),
            None => None,
        };
        let mut keys = Vec::with_capacity(cells.len());
        if let Some(g) = &grid {
            for c in cells.iter() {
                let centroid = m.centroid(c.id)?;
                keys.push((g.encode(QueryPoint::from(centroid))?, c.id));
            }
        }
        keys.sort();
        Ok(Self { cells, index, grid, keys })
    }

    pub fn locate(&self, p: QueryPoint, m: &Mesh) -> Result<Vec<ElemId>, SpatialError> {
        point_locate(p, m, &self.cells, &self.index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate_cube_mesh;
    use crate::mesh::Vertex;

    #[test]
    fn cell_table_sizes() {
        assert_eq!(build_cell_table(&generate_cube_mesh(3)).unwrap().len(), 162);
        assert!(build_cell_table(&Mesh::new()).unwrap().is_empty());

        let mut m = Mesh::new();
        for (i, p) in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].iter().enumerate() {
            m.add_vertex(Vertex::new(i as u64 + 1, p[0], p[1], p[2])).unwrap();
        }
        m.add_tetrahedron(ElemId(1), [1, 2, 3, 4].map(crate::VertexId)).unwrap();
        let t = build_cell_table(&m).unwrap();
        let c = t.get(ElemId(1)).unwrap();
        assert_eq!((c.min, c.max), ([0.0; 3], [1.0; 3]));
    }

    fn two_boxes() -> CellTable {
        [
            Cell { id: ElemId(1), min: [0.0, 0.0, 0.0], max: [1.0, 1.0, 1.0] },
            Cell { id: ElemId(2), min: [1.0, 0.0, 0.0], max: [2.0, 1.0, 1.0] },
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn scan_semantics() {
        let cells = two_boxes();
        assert!(point_in_box_scan(QueryPoint::new(5.0, 0.5, 0.5), &cells).is_empty());
        assert_eq!(point_in_box_scan(QueryPoint::new(0.5, 0.5, 0.5), &cells), vec![ElemId(1)]);
        assert_eq!(point_in_box_scan(QueryPoint::new(1.0, 0.5, 0.5), &cells), vec![ElemId(1), ElemId(2)]);
    }

    #[test]
    fn indexed_matches_scan_and_detects_staleness() {
        let mut cells = two_boxes();
        let idx = IntervalIndex::build(&cells);
        for x in [-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let p = QueryPoint::new(x, 0.5, 1.0);
            assert_eq!(point_in_box_indexed(p, &idx, &cells).unwrap(), point_in_box_scan(p, &cells));
        }
        let empty = CellTable::new();
        let idx_empty = IntervalIndex::build(&empty);
        assert!(point_in_box_indexed(QueryPoint::new(0.0, 0.0, 0.0), &idx_empty, &empty).unwrap().is_empty());

        cells.remove(ElemId(2));
        assert_eq!(
            point_in_box_indexed(QueryPoint::new(0.5, 0.5, 0.5), &idx, &cells),
            Err(SpatialError::StaleIndex { index: 2, cells: 1 })
        );
    }

    #[test]
    fn rejects_flat_cells() {
        let mut t = CellTable::new();
        let flat = Cell { id: ElemId(1), min: [0.0; 3], max: [1.0, 1.0, 0.0] };
        assert_eq!(t.insert(flat), Err(SpatialError::InvalidCell(ElemId(1))));
    }
}

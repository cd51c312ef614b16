use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::ops::Bound;

use super::{CellTable, QueryPoint, SpatialError};
use crate::mesh::ElemId;

/// Totally ordered float for index keys. Cell bounds are always finite.
#[derive(Debug, Clone, Copy)]
struct Key(f64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

type Entry = (Key, Key, Key, Key, ElemId);

/// Composite B-tree index on `(x_min, x_max, y_min, y_max)`, with the
/// element id as a uniquifier.
#[derive(Debug, Clone, Default)]
pub struct IntervalIndex {
    entries: BTreeSet<Entry>,
}

impl IntervalIndex {
    pub fn build(cells: &CellTable) -> Self {
        let entries =
            cells.iter().map(|c| (Key(c.min[0]), Key(c.max[0]), Key(c.min[1]), Key(c.max[1]), c.id)).collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Element ids in key order.
    pub fn iter(&self) -> impl Iterator<Item = ElemId> + '_ {
        self.entries.iter().map(|e| e.4)
    }

    pub(super) fn check_fresh(&self, cells: &CellTable) -> Result<(), SpatialError> {
        if self.entries.len() != cells.len() {
            return Err(SpatialError::StaleIndex { index: self.entries.len(), cells: cells.len() });
        }
        Ok(())
    }

    /// Range seek on `x_min <= x`, residual filter on the other key columns,
    /// then a lookup into the cell table for the z bounds.
    pub(super) fn query(&self, p: QueryPoint, cells: &CellTable) -> Vec<ElemId> {
        if !p.is_finite() {
            return Vec::new();
        }
        let upper: Entry = (Key(p.x), Key(f64::INFINITY), Key(f64::INFINITY), Key(f64::INFINITY), ElemId(u64::MAX));
        let mut out: Vec<ElemId> = self
            .entries
            .range((Bound::Unbounded, Bound::Included(upper)))
            .filter(|(_, x_max, y_min, y_max, _)| p.x <= x_max.0 && y_min.0 <= p.y && p.y <= y_max.0)
            .filter_map(|e| cells.get(e.4))
            .filter(|c| c.min[2] <= p.z && p.z <= c.max[2])
            .map(|c| c.id)
            .collect();
        out.sort_unstable();
        out
    }
}

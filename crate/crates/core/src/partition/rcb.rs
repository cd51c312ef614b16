use std::collections::BTreeMap;

use super::{PartitionError, PartitionMap, Stage};
use crate::mesh::{ElemId, Mesh};

/// Typical bootstrap partition count.
pub const DEFAULT_BOOTSTRAP_PARTS: usize = 8;

/// Recursive coordinate bisection of element centroids.
pub fn rcb(m: &Mesh, parts: usize) -> Result<PartitionMap, PartitionError> {
    let points = m.elements().map(|e| Ok((e.id, m.centroid(e.id)?))).collect::<Result<Vec<_>, PartitionError>>()?;
    rcb_points(points, parts)
}

/// Bisection over arbitrary labelled points. Each split cuts along the axis
/// of largest extent (ties: x, then y, then z) at the median; points are
/// ordered by coordinate and then id, and the lower half gets `floor(n/2)`
/// of them. Leaf sizes therefore differ by at most one.
pub fn rcb_points(mut points: Vec<(ElemId, [f64; 3])>, parts: usize) -> Result<PartitionMap, PartitionError> {
    if parts == 0 || !parts.is_power_of_two() {
        return Err(PartitionError::InvalidPartCount(parts));
    }
    if points.is_empty() {
        return Err(PartitionError::EmptyMesh);
    }
    let mut assignment = BTreeMap::new();
    bisect(&mut points, parts, 0, &mut assignment);
    PartitionMap::new(assignment, parts, Stage::Bootstrap)
}

fn bisect(points: &mut [(ElemId, [f64; 3])], parts: usize, first: u32, out: &mut BTreeMap<ElemId, u32>) {
    if parts == 1 {
        out.extend(points.iter().map(|(e, _)| (*e, first)));
        return;
    }
    let axis = widest_axis(points);
    points.sort_by(|a, b| a.1[axis].total_cmp(&b.1[axis]).then(a.0.cmp(&b.0)));
    let (lo, hi) = points.split_at_mut(points.len() / 2);
    let half = parts / 2;
    bisect(lo, half, first, out);
    bisect(hi, half, first + half as u32, out);
}

fn widest_axis(points: &[(ElemId, [f64; 3])]) -> usize {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (_, p) in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let mut best = 0;
    for a in 1..3 {
        if hi[a] - lo[a] > hi[best] - lo[best] {
            best = a;
        }
    }
    best
}

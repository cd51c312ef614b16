//! Small fixed-size geometric kernels over corner coordinates.

pub type Point = [f64; 3];

/// Relative tolerance on |volume| / diagonal³ below which an element is
/// treated as geometrically flat.
pub const FLAT_TOLERANCE: f64 = 1e-12;

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn det3(a: Point, b: Point, c: Point) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// One sixth of the scalar triple product of the edges leaving corner 0.
pub fn signed_volume(c: &[Point; 4]) -> f64 {
    det3(sub(c[1], c[0]), sub(c[2], c[0]), sub(c[3], c[0])) / 6.0
}

pub fn bounds(c: &[Point; 4]) -> (Point, Point) {
    let mut min = c[0];
    let mut max = c[0];
    for p in &c[1..] {
        for a in 0..3 {
            min[a] = min[a].min(p[a]);
            max[a] = max[a].max(p[a]);
        }
    }
    (min, max)
}

pub fn centroid(c: &[Point; 4]) -> Point {
    let mut out = [0.0; 3];
    for p in c {
        for a in 0..3 {
            out[a] += p[a];
        }
    }
    out.map(|v| v / 4.0)
}

pub fn diagonal(c: &[Point; 4]) -> f64 {
    let (min, max) = bounds(c);
    (0..3).map(|a| (max[a] - min[a]).powi(2)).sum::<f64>().sqrt()
}

/// True when |volume| <= 1e-12 · diagonal³ (diagonal of the element's box).
pub fn is_flat(c: &[Point; 4]) -> bool {
    let v = signed_volume(c);
    v.is_finite() && v.abs() <= FLAT_TOLERANCE * diagonal(c).powi(3)
}

/// Barycentric coordinates of `p` as ratios of signed sub-volumes.
/// Returns `None` for a flat element.
pub fn barycentric(c: &[Point; 4], p: Point) -> Option<[f64; 4]> {
    if is_flat(c) {
        return None;
    }
    let total = signed_volume(c);
    let mut out = [0.0; 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut sub = *c;
        sub[i] = p;
        *slot = signed_volume(&sub) / total;
    }
    Some(out)
}

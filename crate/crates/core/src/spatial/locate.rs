use super::{point_in_box_indexed, CellTable, IntervalIndex, QueryPoint, SpatialError};
use crate::geometry;
use crate::mesh::{ElemId, Mesh, MeshError, Tetrahedron};

/// Lower bound on every barycentric coordinate for a point to count as
/// inside (or on the boundary of) an element.
pub const INSIDE_TOLERANCE: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycentricCoords(pub [f64; 4]);

impl BarycentricCoords {
    pub fn is_inside(&self) -> bool {
        self.0.iter().all(|&l| l >= INSIDE_TOLERANCE)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

pub fn barycentric(p: QueryPoint, t: &Tetrahedron, m: &Mesh) -> Result<BarycentricCoords, MeshError> {
    let corners = m.corner_coords(t)?;
    geometry::barycentric(&corners, p.coords()).map(BarycentricCoords).ok_or(MeshError::ZeroVolume(t.id))
}

/// Coarse box filter through the interval index, then exact containment.
/// Points on shared faces or edges come back with every touching element.
pub fn point_locate(
    p: QueryPoint,
    m: &Mesh,
    cells: &CellTable,
    idx: &IntervalIndex,
) -> Result<Vec<ElemId>, SpatialError> {
    let candidates = point_in_box_indexed(p, idx, cells)?;
    let mut out = Vec::new();
    for id in candidates {
        let Some(t) = m.element(id) else { continue };
        match barycentric(p, t, m) {
            Ok(l) if l.is_inside() => out.push(id),
            Ok(_) | Err(MeshError::ZeroVolume(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate_cube_mesh;
    use crate::spatial::build_cell_table;
    use rand::{Rng, SeedableRng};

    #[test]
    fn centroid_and_corner() {
        let m = generate_cube_mesh(1);
        let t = *m.element(ElemId(3)).unwrap();
        let c = m.centroid(t.id).unwrap();
        let l = barycentric(QueryPoint::from(c), &t, &m).unwrap();
        for v in l.0 {
            assert!((v - 0.25).abs() < 1e-12);
        }
        let v2 = m.vertex(t.corners[2]).unwrap().coords();
        let l = barycentric(QueryPoint::from(v2), &t, &m).unwrap();
        assert_eq!(l.0, [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn recovers_sampled_coefficients() {
        let m = generate_cube_mesh(2);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for t in m.elements() {
            let raw: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.01..1.0));
            let s: f64 = raw.iter().sum();
            let lambda = raw.map(|r| r / s);
            let c = m.corner_coords(t).unwrap();
            let mut p = [0.0; 3];
            for i in 0..4 {
                for a in 0..3 {
                    p[a] += lambda[i] * c[i][a];
                }
            }
            let got = barycentric(QueryPoint::from(p), t, &m).unwrap();
            assert!((got.sum() - 1.0).abs() < 1e-12);
            for (g, l) in got.0.iter().zip(lambda) {
                assert!((g - l).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn locate_centroid_and_outside() {
        let m = generate_cube_mesh(2);
        let cells = build_cell_table(&m).unwrap();
        let idx = IntervalIndex::build(&cells);
        for t in m.elements() {
            let c = m.centroid(t.id).unwrap();
            assert_eq!(point_locate(QueryPoint::from(c), &m, &cells, &idx).unwrap(), vec![t.id]);
        }
        assert!(point_locate(QueryPoint::new(3.0, 0.5, 0.5), &m, &cells, &idx).unwrap().is_empty());
        // a mesh vertex touches every element around it
        let corner = point_locate(QueryPoint::new(0.5, 0.5, 0.5), &m, &cells, &idx).unwrap();
        assert!(corner.len() > 1);
    }
}

//! Deterministic unit-cube fixture meshes.

use crate::mesh::{ElemId, Mesh, Vertex, VertexId};

/// Corner offsets of a unit cell, indexed by bit pattern `x | y<<1 | z<<2`.
const AXIS_BITS: [u64; 3] = [1, 2, 4];

/// Unit cube with `n` cells per axis, `(n+1)^3` vertices and `6n^3`
/// tetrahedra. Every cell is split along its (0,0,0)-(1,1,1) diagonal into
/// six tets, one per axis ordering, so neighbouring cells conform.
///
/// Vertex `(i, j, k)` has id `1 + i + (n+1)(j + (n+1)k)` and elements are
/// numbered `1 + 6·cell + t` with cells in x-fastest order. All elements
/// have positive signed volume.
pub fn generate_cube_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "cube fixture needs at least one subdivision");
    let side = n as u64 + 1;
    let vid = |i: u64, j: u64, k: u64| VertexId(1 + i + side * (j + side * k));
    let mut mesh = Mesh::new();
    for k in 0..side {
        for j in 0..side {
            for i in 0..side {
                let h = n as f64;
                mesh.add_vertex(Vertex { id: vid(i, j, k), x: i as f64 / h, y: j as f64 / h, z: k as f64 / h })
                    .expect("fixture vertex ids are unique");
            }
        }
    }
    // axis orderings; odd permutations get their last two corners swapped
    const ORDERS: [([usize; 3], bool); 6] = [
        ([0, 1, 2], true),
        ([1, 2, 0], true),
        ([2, 0, 1], true),
        ([1, 0, 2], false),
        ([0, 2, 1], false),
        ([2, 1, 0], false),
    ];
    let n = n as u64;
    let mut next = 1u64;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let corner = |bits: u64| vid(i + (bits & 1), j + (bits >> 1 & 1), k + (bits >> 2 & 1));
                for (order, even) in ORDERS {
                    let a = AXIS_BITS[order[0]];
                    let b = a | AXIS_BITS[order[1]];
                    let mut c = [corner(0), corner(a), corner(b), corner(7)];
                    if !even {
                        c.swap(2, 3);
                    }
                    mesh.add_tetrahedron(ElemId(next), c).expect("fixture elements are valid");
                    next += 1;
                }
            }
        }
    }
    mesh
}

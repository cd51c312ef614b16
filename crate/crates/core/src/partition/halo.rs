use std::collections::{BTreeMap, BTreeSet};

use super::{PartitionError, PartitionMap};
use crate::mesh::{ElemId, Mesh, VertexId};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartitionHalo {
    pub owned: BTreeSet<ElemId>,
    /// Union of the corners of owned elements.
    pub required: BTreeSet<VertexId>,
    /// Required vertices that at least one other partition also requires,
    /// with the other partitions that share them.
    pub ghosts: BTreeMap<VertexId, BTreeSet<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HaloSpec {
    pub parts: Vec<PartitionHalo>,
}

impl HaloSpec {
    pub fn owner_count(&self) -> usize {
        self.parts.iter().map(|p| p.owned.len()).sum()
    }
}

/// Owned, required and shared vertex sets for every partition.
pub fn compute_halos(m: &Mesh, pm: &PartitionMap) -> Result<HaloSpec, PartitionError> {
    let mut parts = vec![PartitionHalo::default(); pm.parts()];
    let mut users: BTreeMap<VertexId, BTreeSet<u32>> = BTreeMap::new();
    for e in m.elements() {
        let p = pm.part_of(e.id).ok_or(PartitionError::Unassigned(e.id))?;
        let halo = &mut parts[p as usize];
        halo.owned.insert(e.id);
        for v in e.corners {
            halo.required.insert(v);
            users.entry(v).or_default().insert(p);
        }
    }
    for (v, sharing) in users.into_iter().filter(|(_, s)| s.len() > 1) {
        for &p in &sharing {
            let others = sharing.iter().copied().filter(|&q| q != p).collect();
            parts[p as usize].ghosts.insert(v, others);
        }
    }
    Ok(HaloSpec { parts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate_cube_mesh;
    use crate::mesh::Vertex;
    use crate::partition::{rcb, Stage};

    #[test]
    fn single_partition_has_no_ghosts() {
        let m = generate_cube_mesh(2);
        let pm = rcb(&m, 1).unwrap();
        let h = compute_halos(&m, &pm).unwrap();
        assert_eq!(h.parts.len(), 1);
        assert!(h.parts[0].ghosts.is_empty());
        assert_eq!(h.parts[0].required.len(), m.vertex_count());
    }

    #[test]
    fn face_neighbours_share_three_ghosts() {
        let mut m = Mesh::new();
        for i in 1..=5u64 {
            m.add_vertex(Vertex::new(i, i as f64, (i * i) as f64, (i * i * i) as f64)).unwrap();
        }
        m.add_tetrahedron(ElemId(1), [1, 2, 3, 4].map(VertexId)).unwrap();
        m.add_tetrahedron(ElemId(2), [2, 3, 4, 5].map(VertexId)).unwrap();
        let pm = PartitionMap::new(BTreeMap::from([(ElemId(1), 0), (ElemId(2), 1)]), 2, Stage::Refined).unwrap();
        let h = compute_halos(&m, &pm).unwrap();
        let shared: BTreeSet<VertexId> = [2, 3, 4].map(VertexId).into();
        for p in &h.parts {
            assert_eq!(p.required.len(), 4);
            assert_eq!(p.ghosts.keys().copied().collect::<BTreeSet<_>>(), shared);
        }
        assert_eq!(h.parts[0].ghosts[&VertexId(2)], BTreeSet::from([1]));
    }

    #[test]
    fn unassigned_element_is_an_error() {
        let m = generate_cube_mesh(1);
        let pm = PartitionMap::new(BTreeMap::from([(ElemId(1), 0)]), 1, Stage::Bootstrap).unwrap();
        assert_eq!(compute_halos(&m, &pm), Err(PartitionError::Unassigned(ElemId(2))));
    }
}

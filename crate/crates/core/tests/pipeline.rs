use std::fs;

use proptest::prelude::*;
use tetdb_core::attributes::{
    AttributeBinding, AttributeStore, Classification, MeshEntity, TopoKind, TopoRef, Topology,
};
use tetdb_core::io::tables::{dump_mesh, read_partition, write_partition};
use tetdb_core::io::{bulk_load, generate_cube_mesh, read_bundle, CheckMode, TargetTable};
use tetdb_core::partition::{compute_halos, rcb, refine, scatter, AttributeSource, RefineOptions};
use tetdb_core::spatial::{QueryPoint, SpatialIndex};
use tetdb_core::views::element_adjacency_graph;
use tetdb_core::Mesh;

fn reload(m: &Mesh) -> Mesh {
    let (mut v, mut e) = (Vec::new(), Vec::new());
    dump_mesh(m, &mut v, &mut e).unwrap();
    let mut out = Mesh::new();
    assert!(bulk_load(&mut out, &v[..], TargetTable::Vertices, CheckMode::Immediate).unwrap().is_clean());
    assert!(bulk_load(&mut out, &e[..], TargetTable::Elements, CheckMode::Immediate).unwrap().is_clean());
    out
}

#[test]
fn files_on_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_cube_mesh(4);
    let (vp, ep) = (dir.path().join("vertices.csv"), dir.path().join("elements.csv"));
    dump_mesh(&m, fs::File::create(&vp).unwrap(), fs::File::create(&ep).unwrap()).unwrap();

    let mut back = Mesh::new();
    let rv = bulk_load(
        &mut back,
        std::io::BufReader::new(fs::File::open(&vp).unwrap()),
        TargetTable::Vertices,
        CheckMode::Deferred,
    )
    .unwrap();
    assert_eq!(rv.loaded, 125);
    let re = bulk_load(
        &mut back,
        std::io::BufReader::new(fs::File::open(&ep).unwrap()),
        TargetTable::Elements,
        CheckMode::Deferred,
    )
    .unwrap();
    assert_eq!((re.loaded, re.violations.len()), (384, 0));
    assert!(back.validate().is_clean());
    assert!(back.elements().eq(m.elements()));
}

#[test]
fn refined_partition_survives_its_tables() {
    let m = generate_cube_mesh(3);
    let g = element_adjacency_graph(&m);
    let boot = rcb(&m, 4).unwrap();
    let pm = refine(&g, &boot, 6, RefineOptions::default()).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_partition(&mut a, &mut b, &pm).unwrap();
    assert_eq!(read_partition(&a[..], &b[..]).unwrap(), pm);
    assert_eq!(pm.groups().values().map(Vec::len).sum::<usize>(), 6);
}

#[test]
fn scattered_attributes_match_elementwise_resolution() {
    let m = generate_cube_mesh(3);
    let mut topo = Topology::new();
    topo.add_entity(TopoRef::new(TopoKind::Region, 1), &[]).unwrap();
    topo.add_entity(TopoRef::new(TopoKind::Region, 2), &[]).unwrap();
    let mut cls = Classification::new();
    for t in m.elements() {
        let region = if t.id.0 % 2 == 0 { 1 } else { 2 };
        cls.classify(&topo, MeshEntity::Element(t.id), TopoRef::new(TopoKind::Region, region)).unwrap();
    }
    let mut store = AttributeStore::new();
    store
        .assign(&topo, TopoRef::new(TopoKind::Region, 1), AttributeBinding::scalar("k", 1.5, [TopoKind::Region]))
        .unwrap();
    store
        .assign(&topo, TopoRef::new(TopoKind::Region, 2), AttributeBinding::scalar("k", 0.1, [TopoKind::Region]))
        .unwrap();

    let pm = rcb(&m, 4).unwrap();
    let halos = compute_halos(&m, &pm).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let src = AttributeSource { store: &store, classification: &cls, topology: &topo };
    let report = scatter(&m, &pm, &halos, Some(src), dir.path()).unwrap();
    assert_eq!(report.sizes.iter().sum::<usize>(), m.element_count());
    let mut seen = 0;
    for d in &report.directories {
        let b = read_bundle(d).unwrap();
        for (e, r) in &b.attributes {
            let want = store.resolve(MeshEntity::Element(*e), "k", &cls, &topo).unwrap();
            assert_eq!((&r.value, r.provenance), (&want.value, want.provenance));
            seen += 1;
        }
    }
    assert_eq!(seen, m.element_count());
}

#[test]
fn spatial_index_survives_reload() {
    let m = generate_cube_mesh(3);
    let back = reload(&m);
    let a = SpatialIndex::build(&m, 8).unwrap();
    let b = SpatialIndex::build(&back, 8).unwrap();
    assert_eq!(a.keys, b.keys);
    let p = QueryPoint::new(0.2, 0.55, 0.9);
    assert_eq!(a.locate(p, &m).unwrap(), b.locate(p, &back).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Any subset of rows pointing at missing vertices is reported exactly.
    #[test]
    fn deferred_load_reports_every_dangling_row(mask in prop::collection::vec(any::<bool>(), 48)) {
        let m = generate_cube_mesh(2);
        let (mut v, mut e) = (Vec::new(), Vec::new());
        dump_mesh(&m, &mut v, &mut e).unwrap();
        let text = String::from_utf8(e).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut want = Vec::new();
        for (i, bad) in mask.iter().enumerate() {
            if *bad {
                let mut f: Vec<String> = lines[i + 1].split(',').map(str::to_string).collect();
                f[4] = "77777".into();
                lines[i + 1] = f.join(",");
                want.push(i + 2);
            }
        }
        let body: String = lines.iter().map(|l| format!("{l}\n")).collect();
        let mut out = Mesh::new();
        bulk_load(&mut out, &v[..], TargetTable::Vertices, CheckMode::Deferred).unwrap();
        let r = bulk_load(&mut out, body.as_bytes(), TargetTable::Elements, CheckMode::Deferred).unwrap();
        let got: Vec<usize> = r.violations.iter().map(|x| x.line).collect();
        prop_assert_eq!(got, want);
        prop_assert_eq!(r.loaded, 48);
    }
}

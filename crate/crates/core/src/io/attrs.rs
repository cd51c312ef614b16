//! Tabular encodings for topology, classification and attribute tables.
//!
//! Attribute values use a `kind` int column (0 scalar, 1 vector,
//! 2 expression) and a `value` text column: a float, `;`-separated floats,
//! or the expression string verbatim.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use super::tables::{id_field, schema, to_id};
use super::tabular::{format_float, read_table, Field, FormatError, TableWriter};
use crate::attributes::{
    AttrValue, AttributeBinding, AttributeStore, Classification, CoordSystem, MeshEntity, ResolvedAttribute, TopoKind,
    TopoRef, Topology,
};
use crate::mesh::{ElemId, VertexId};

pub const TOPOLOGY: &str = "kind:int,id:int,boundary:text";
pub const CLASSIFICATION: &str = "entity_kind:int,entity_id:int,topo_kind:int,topo_id:int";
pub const BINDINGS: &str =
    "topo_kind:int,topo_id:int,name:text,value_kind:int,value:text,context:text,scope:text,group:int,time_dependent:int";
pub const SAMPLES: &str = "topo_kind:int,topo_id:int,name:text,time:float,value_kind:int,value:text";
pub const RESOLVED: &str =
    "elem_id:int,name:text,value_kind:int,value:text,context:text,provenance_kind:int,provenance_id:int";

fn perr(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

pub fn encode_value(v: &AttrValue) -> (i64, String) {
    match v {
        AttrValue::Scalar(x) => (0, format_float(*x)),
        AttrValue::Vector(xs) => (1, xs.iter().map(|&x| format_float(x)).collect::<Vec<_>>().join(";")),
        AttrValue::Expression(s) => (2, s.clone()),
    }
}

pub fn decode_value(kind: i64, raw: &str, line: usize) -> Result<AttrValue, FormatError> {
    let float = |s: &str| s.parse::<f64>().map_err(|_| perr(line, format!("`{s}` is not a float")));
    match kind {
        0 => Ok(AttrValue::Scalar(float(raw)?)),
        1 if raw.is_empty() => Ok(AttrValue::Vector(Vec::new())),
        1 => Ok(AttrValue::Vector(raw.split(';').map(float).collect::<Result<_, _>>()?)),
        2 => Ok(AttrValue::Expression(raw.to_string())),
        k => Err(perr(line, format!("unknown value kind {k}"))),
    }
}

fn topo_kind(code: i64, line: usize) -> Result<TopoKind, FormatError> {
    TopoKind::from_code(code).ok_or_else(|| perr(line, format!("unknown topology kind {code}")))
}

fn topo_ref(kind: &Field, id: &Field, line: usize) -> Result<TopoRef, FormatError> {
    Ok(TopoRef::new(topo_kind(kind.as_int(), line)?, to_id(id.as_int(), line)?))
}

fn context(raw: &str, line: usize) -> Result<CoordSystem, FormatError> {
    CoordSystem::parse(raw).ok_or_else(|| perr(line, format!("unknown context `{raw}`")))
}

fn join_ids(ids: impl IntoIterator<Item = u64>) -> String {
    ids.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_topology(w: impl Write, topo: &Topology) -> std::io::Result<()> {
    let mut t = TableWriter::new(w, &schema(TOPOLOGY))?;
    // lower kinds first so a reader can add entities in file order
    let mut all: Vec<TopoRef> = topo.entities().collect();
    all.sort_by_key(|e| (e.kind, e.id));
    for e in all {
        let b = join_ids(topo.boundary(e).iter().map(|b| b.id));
        t.write_row(&[Field::Int(e.kind.code()), id_field(e.id), Field::Text(b)])?;
    }
    t.finish().map(|_| ())
}

pub fn read_topology(r: impl BufRead) -> Result<Topology, FormatError> {
    let mut topo = Topology::new();
    for (line, f) in read_table(r, Some(&schema(TOPOLOGY)))?.rows {
        let e = topo_ref(&f[0], &f[1], line)?;
        let raw = f[2].as_text();
        let boundary = if raw.is_empty() {
            Vec::new()
        } else {
            raw.split(';')
                .map(|s| s.parse::<u64>().map_err(|_| perr(line, format!("bad id `{s}`"))))
                .collect::<Result<_, _>>()?
        };
        topo.add_entity(e, &boundary).map_err(|err| perr(line, err.to_string()))?;
    }
    Ok(topo)
}

pub fn write_classification(w: impl Write, cls: &Classification) -> std::io::Result<()> {
    let mut t = TableWriter::new(w, &schema(CLASSIFICATION))?;
    for (m, target) in cls.iter() {
        let (kind, id) = match m {
            MeshEntity::Element(e) => (0, e.0),
            MeshEntity::Vertex(v) => (1, v.0),
        };
        t.write_row(&[Field::Int(kind), id_field(id), Field::Int(target.kind.code()), id_field(target.id)])?;
    }
    t.finish().map(|_| ())
}

pub fn read_classification(r: impl BufRead, topo: &Topology) -> Result<Classification, FormatError> {
    let mut cls = Classification::new();
    for (line, f) in read_table(r, Some(&schema(CLASSIFICATION)))?.rows {
        let id = to_id(f[1].as_int(), line)?;
        let entity = match f[0].as_int() {
            0 => MeshEntity::Element(ElemId(id)),
            1 => MeshEntity::Vertex(VertexId(id)),
            k => return Err(perr(line, format!("unknown mesh entity kind {k}"))),
        };
        let target = topo_ref(&f[2], &f[3], line)?;
        cls.classify(topo, entity, target).map_err(|e| perr(line, e.to_string()))?;
    }
    Ok(cls)
}

/// Writes bindings and their time samples as two tables.
pub fn write_bindings(bindings: impl Write, samples: impl Write, store: &AttributeStore) -> std::io::Result<()> {
    let mut t = TableWriter::new(bindings, &schema(BINDINGS))?;
    let mut s = TableWriter::new(samples, &schema(SAMPLES))?;
    for (e, b) in store.iter() {
        let (kind, value) = encode_value(&b.value);
        let scope = b.scope.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(";");
        t.write_row(&[
            Field::Int(e.kind.code()),
            id_field(e.id),
            Field::Text(b.name.clone()),
            Field::Int(kind),
            Field::Text(value),
            Field::Text(b.context.as_str().into()),
            Field::Text(scope),
            Field::Int(b.group.map_or(-1, i64::from)),
            Field::Int(i64::from(b.time_dependent)),
        ])?;
        for (time, v) in &b.samples {
            let (kind, value) = encode_value(v);
            s.write_row(&[
                Field::Int(e.kind.code()),
                id_field(e.id),
                Field::Text(b.name.clone()),
                Field::Float(*time),
                Field::Int(kind),
                Field::Text(value),
            ])?;
        }
    }
    t.finish()?;
    s.finish().map(|_| ())
}

pub fn read_bindings(
    bindings: impl BufRead,
    samples: impl BufRead,
    topo: &Topology,
) -> Result<AttributeStore, FormatError> {
    let mut parsed: Vec<(usize, TopoRef, AttributeBinding)> = Vec::new();
    for (line, f) in read_table(bindings, Some(&schema(BINDINGS)))?.rows {
        let e = topo_ref(&f[0], &f[1], line)?;
        let value = decode_value(f[3].as_int(), f[4].as_text(), line)?;
        let scope = f[6]
            .as_text()
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| TopoKind::parse(s).ok_or_else(|| perr(line, format!("unknown scope kind `{s}`"))))
            .collect::<Result<BTreeSet<_>, _>>()?;
        let group = match f[7].as_int() {
            -1 => None,
            g => Some(u32::try_from(g).map_err(|_| perr(line, "group id out of range"))?),
        };
        let mut b = AttributeBinding::new(f[2].as_text(), value, scope);
        b.context = context(f[5].as_text(), line)?;
        b.group = group;
        b.time_dependent = f[8].as_int() != 0;
        parsed.push((line, e, b));
    }
    for (line, f) in read_table(samples, Some(&schema(SAMPLES)))?.rows {
        let e = topo_ref(&f[0], &f[1], line)?;
        let value = decode_value(f[4].as_int(), f[5].as_text(), line)?;
        let owner = parsed
            .iter_mut()
            .find(|(_, pe, b)| *pe == e && b.name == f[2].as_text())
            .ok_or_else(|| perr(line, "sample for unknown binding"))?;
        owner.2.samples.push((f[3].as_float(), value));
    }
    let mut store = AttributeStore::new();
    for (line, e, b) in parsed {
        store.assign(topo, e, b).map_err(|err| perr(line, err.to_string()))?;
    }
    Ok(store)
}

pub fn write_resolved<'a>(
    w: impl Write,
    rows: impl IntoIterator<Item = &'a (ElemId, ResolvedAttribute)>,
) -> std::io::Result<()> {
    let mut t = TableWriter::new(w, &schema(RESOLVED))?;
    for (e, r) in rows {
        let (kind, value) = encode_value(&r.value);
        t.write_row(&[
            id_field(e.0),
            Field::Text(r.name.clone()),
            Field::Int(kind),
            Field::Text(value),
            Field::Text(r.context.as_str().into()),
            Field::Int(r.provenance.kind.code()),
            id_field(r.provenance.id),
        ])?;
    }
    t.finish().map(|_| ())
}

/// Reads resolved rows. The hop distance is not stored and comes back as 0.
pub fn read_resolved(r: impl BufRead) -> Result<Vec<(ElemId, ResolvedAttribute)>, FormatError> {
    read_table(r, Some(&schema(RESOLVED)))?
        .rows
        .into_iter()
        .map(|(line, f)| {
            Ok((
                ElemId(to_id(f[0].as_int(), line)?),
                ResolvedAttribute {
                    name: f[1].as_text().to_string(),
                    value: decode_value(f[2].as_int(), f[3].as_text(), line)?,
                    context: context(f[4].as_text(), line)?,
                    provenance: topo_ref(&f[5], &f[6], line)?,
                    distance: 0,
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_store() -> (Topology, Classification, AttributeStore) {
        let mut topo = Topology::new();
        topo.add_entity(TopoRef::new(TopoKind::Face, 1), &[]).unwrap();
        topo.add_entity(TopoRef::new(TopoKind::Face, 2), &[]).unwrap();
        topo.add_entity(TopoRef::new(TopoKind::Region, 1), &[1, 2]).unwrap();
        let mut cls = Classification::new();
        cls.classify(&topo, MeshEntity::Element(ElemId(4)), TopoRef::new(TopoKind::Region, 1)).unwrap();
        cls.classify(&topo, MeshEntity::Vertex(VertexId(2)), TopoRef::new(TopoKind::Face, 2)).unwrap();
        let mut store = AttributeStore::new();
        let r1 = TopoRef::new(TopoKind::Region, 1);
        store.assign(&topo, r1, AttributeBinding::scalar("k", 0.1, [TopoKind::Region]).with_group(3)).unwrap();
        let mut load = AttributeBinding::new(
            "traction",
            AttrValue::Expression("p(t), with commas; and %".into()),
            [TopoKind::Face, TopoKind::Vertex],
        )
        .with_context(CoordSystem::Spherical);
        load.time_dependent = true;
        load.samples = vec![(0.0, AttrValue::Vector(vec![1.0, 2.5])), (1.5, AttrValue::Vector(vec![]))];
        store.assign(&topo, TopoRef::new(TopoKind::Face, 2), load).unwrap();
        (topo, cls, store)
    }

    #[test]
    fn stores_round_trip() {
        let (topo, cls, store) = sample_store();
        let mut tb = Vec::new();
        write_topology(&mut tb, &topo).unwrap();
        let topo2 = read_topology(&tb[..]).unwrap();
        assert_eq!(topo2, topo);

        let mut cb = Vec::new();
        write_classification(&mut cb, &cls).unwrap();
        assert_eq!(read_classification(&cb[..], &topo2).unwrap(), cls);

        let (mut bb, mut sb) = (Vec::new(), Vec::new());
        write_bindings(&mut bb, &mut sb, &store).unwrap();
        assert_eq!(read_bindings(&bb[..], &sb[..], &topo2).unwrap(), store);
    }

    #[test]
    fn resolved_rows_round_trip() {
        let rows = vec![(
            ElemId(3),
            ResolvedAttribute {
                name: "k".into(),
                value: AttrValue::Vector(vec![0.1, -2.0]),
                context: CoordSystem::Cylindrical,
                provenance: TopoRef::new(TopoKind::Region, 9),
                distance: 0,
            },
        )];
        let mut buf = Vec::new();
        write_resolved(&mut buf, &rows).unwrap();
        assert_eq!(read_resolved(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn bad_value_kind() {
        assert!(decode_value(5, "1", 2).is_err());
        assert!(decode_value(1, "1;x", 2).is_err());
    }
}

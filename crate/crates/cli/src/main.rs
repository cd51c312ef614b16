mod workspace;

use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tetdb_core::attributes::{
    AttrError, AttrValue, AttributeBinding, CoordSystem, MeshEntity, ResolvedAttribute, TopoKind, TopoRef,
};
use tetdb_core::io::tables::{read_cells, read_incidence, write_cells, write_elements, write_morton};
use tetdb_core::io::tabular::{format_float, Field, TableWriter};
use tetdb_core::io::{
    bulk_load, estimate_solution_size, generate_cube_mesh, CheckMode, LoadError, SolutionSizeQuery, TargetTable,
};
use tetdb_core::partition::{
    compute_halos, gather, rcb, refine, result_schema, scatter, AttributeSource, BalanceReport, RefineOptions,
    DEFAULT_IMBALANCE, DEFAULT_PASSES,
};
use tetdb_core::spatial::{point_locate, IntervalIndex, QueryPoint, SpatialIndex, DEFAULT_BITS};
use tetdb_core::views::{
    element_adjacency_graph, to_normalized, to_quadruple, RepresentationMode, RepresentationPolicy,
};
use tetdb_core::{ElemId, Mesh, VertexId};

use workspace::*;

/// Exit status for constraint or validation findings.
const FINDINGS: u8 = 2;

#[derive(Parser)]
#[command(
    name = "tetdb",
    version,
    about = "Tetrahedral mesh workspaces: load, validate, index, partition, scatter and gather"
)]
struct Cli {
    /// Workspace directory.
    #[arg(long, global = true, default_value = ".")]
    ws: PathBuf,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a workspace holding an n×n×n unit-cube fixture.
    GenCube {
        #[arg(long)]
        n: usize,
        /// Workspace to create (defaults to --ws).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bulk-load vertex and/or element tables into the workspace.
    Load {
        #[arg(long)]
        vertices: Option<PathBuf>,
        #[arg(long)]
        elements: Option<PathBuf>,
        /// deferred or immediate.
        #[arg(long, default_value = "deferred")]
        check: String,
        /// Element count above which both representations are kept.
        #[arg(long)]
        dual_threshold: Option<usize>,
    },
    /// Check keys, references, degeneracy and flat elements.
    Validate,
    /// Materialize the incidence table.
    Normalize {
        /// Keep only the incidence table on disk.
        #[arg(long)]
        only: bool,
    },
    /// Rebuild the element table from the incidence table.
    Denormalize {
        /// Drop the incidence table afterwards.
        #[arg(long)]
        only: bool,
    },
    #[command(subcommand)]
    Index(IndexCmd),
    /// Elements containing a point, one id per line.
    Locate {
        /// Point as x,y,z.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Bisection bootstrap followed by refinement.
    Partition {
        #[arg(long, default_value_t = 8)]
        bootstrap: usize,
        #[arg(long)]
        refine: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_IMBALANCE)]
        imbalance: f64,
        #[arg(long, default_value_t = DEFAULT_PASSES)]
        passes: usize,
    },
    /// Write one bundle directory per partition.
    Scatter {
        #[arg(long)]
        out: PathBuf,
    },
    /// Stage and load result files from `<in>/part-*/results.csv`.
    Gather {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        loaders: usize,
        /// Staging directory (defaults to `<ws>/staging`).
        #[arg(long)]
        staging: Option<PathBuf>,
    },
    #[command(subcommand)]
    Attr(AttrCmd),
    /// Lower bound on solution output size in bytes.
    EstimateSize {
        #[arg(long = "N")]
        elements: u64,
        #[arg(long = "S")]
        state_vars: u64,
        #[arg(long = "G")]
        gauss_points: u64,
        #[arg(long = "T", default_value_t = 1)]
        time_samples: u64,
    },
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Build the cell table, interval index and Morton keys.
    Build {
        #[arg(long, default_value_t = DEFAULT_BITS)]
        bits: u32,
    },
}

#[derive(Args)]
struct TopoArg {
    /// vertex, edge, face or region.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    id: u64,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MeshTarget {
    #[arg(long)]
    element: Option<u64>,
    #[arg(long)]
    vertex: Option<u64>,
    /// Every element in the mesh.
    #[arg(long)]
    all_elements: bool,
}

#[derive(Subcommand)]
enum AttrCmd {
    /// Add a topology entity with its boundary ids (one level down).
    Entity {
        #[command(flatten)]
        at: TopoArg,
        #[arg(long, value_delimiter = ',')]
        boundary: Vec<u64>,
    },
    /// Map mesh entities onto a topology entity.
    Classify {
        #[command(flatten)]
        target: MeshTarget,
        #[command(flatten)]
        at: TopoArg,
    },
    /// Bind a named value to a topology entity.
    Assign {
        #[command(flatten)]
        at: TopoArg,
        #[arg(long)]
        name: String,
        /// Scalar, or comma-separated vector.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "expr")]
        value: Option<String>,
        /// Expression stored verbatim.
        #[arg(long)]
        expr: Option<String>,
        /// Kinds the binding applies to, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        scope: Vec<String>,
        #[arg(long, default_value = "cartesian")]
        context: String,
        #[arg(long)]
        group: Option<u32>,
    },
    /// Resolve attributes for mesh entities.
    Resolve {
        #[command(flatten)]
        target: MeshTarget,
        /// Attribute name; all element attributes when omitted.
        #[arg(long)]
        name: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version go to stdout and succeed; usage errors exit 1
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let ws = cli.ws;
    match cli.cmd {
        Command::GenCube { n, out } => gen_cube(&out.unwrap_or(ws), n),
        Command::Load { vertices, elements, check, dual_threshold } => {
            load(&ws, vertices.as_deref(), elements.as_deref(), &check, dual_threshold)
        }
        Command::Validate => validate(&ws),
        Command::Normalize { only } => normalize(&ws, only),
        Command::Denormalize { only } => denormalize(&ws, only),
        Command::Index(IndexCmd::Build { bits }) => index_build(&ws, bits),
        Command::Locate { point } => locate(&ws, &point),
        Command::Partition { bootstrap, refine, imbalance, passes } => {
            partition(&ws, bootstrap, refine.unwrap_or(bootstrap), RefineOptions { imbalance, max_passes: passes })
        }
        Command::Scatter { out } => scatter_cmd(&ws, &out),
        Command::Gather { input, loaders, staging } => gather_cmd(&ws, &input, loaders, staging),
        Command::Attr(cmd) => attr(&ws, cmd),
        Command::EstimateSize { elements, state_vars, gauss_points, time_samples } => {
            let bytes = estimate_solution_size(SolutionSizeQuery { elements, state_vars, gauss_points, time_samples });
            println!("{bytes}");
            Ok(0)
        }
    }
}

fn gen_cube(root: &Path, n: usize) -> Result<u8> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let mut ws = Workspace::create(root)?;
    let _lock = ws.lock()?;
    let mut m = generate_cube_mesh(n);
    m.apply_policy(&RepresentationPolicy { threshold: ws.dual_threshold()?, ..Default::default() });
    ws.save_mesh(&m)?;
    println!(
        "workspace={} vertices={} elements={} mode={}",
        root.display(),
        m.vertex_count(),
        m.element_count(),
        m.mode().as_str()
    );
    Ok(0)
}

fn load(
    root: &Path,
    vertices: Option<&Path>,
    elements: Option<&Path>,
    check: &str,
    threshold: Option<usize>,
) -> Result<u8> {
    let mode =
        CheckMode::parse(check).ok_or_else(|| anyhow!("--check must be deferred or immediate, not `{check}`"))?;
    if vertices.is_none() && elements.is_none() {
        bail!("nothing to load: pass --vertices and/or --elements");
    }
    let mut ws = Workspace::create(root)?;
    let _lock = ws.lock()?;
    if let Some(t) = threshold {
        ws.set("dual_threshold", t);
    }
    let mut m = ws.load_mesh()?;
    let mut findings = false;
    for (path, table) in [(vertices, TargetTable::Vertices), (elements, TargetTable::Elements)] {
        let Some(path) = path else { continue };
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        match bulk_load(&mut m, BufReader::new(file), table, mode) {
            Ok(report) => {
                findings |= !report.is_clean();
                print!("{report}");
            }
            Err(LoadError::Constraint { line, error }) => {
                // the failed table was rolled back; earlier tables stay loaded
                ws.save_mesh(&m)?;
                println!("table={} status=aborted line={line} error={error}", table.as_str());
                return Ok(FINDINGS);
            }
            Err(e) => return Err(e).with_context(|| format!("loading {}", path.display())),
        }
    }
    m.apply_policy(&RepresentationPolicy { threshold: ws.dual_threshold()?, ..Default::default() });
    ws.save_mesh(&m)?;
    println!("mode={}", m.mode().as_str());
    Ok(if findings { FINDINGS } else { 0 })
}

fn validate(root: &Path) -> Result<u8> {
    let ws = Workspace::open(root)?;
    let m = ws.load_mesh()?;
    let r = m.validate();
    println!(
        "vertices={} elements={} violations={} zero_volume={}",
        m.vertex_count(),
        m.element_count(),
        r.violations.len(),
        r.zero_volume.len()
    );
    for v in &r.violations {
        println!("violation {v}");
    }
    for e in &r.zero_volume {
        println!("zero-volume elem={e}");
    }
    Ok(if r.is_clean() { 0 } else { FINDINGS })
}

fn normalize(root: &Path, only: bool) -> Result<u8> {
    let mut ws = Workspace::open(root)?;
    let _lock = ws.lock()?;
    let mut m = ws.load_mesh()?;
    let rows = to_normalized(m.elements());
    let back = to_quadruple(&rows)?;
    let ok = back.iter().eq(m.elements());
    if !ok {
        println!("rows={} round_trip=failed", rows.len());
        return Ok(FINDINGS);
    }
    m.set_mode(if only { RepresentationMode::NormalizedOnly } else { RepresentationMode::Dual });
    ws.save_mesh(&m)?;
    println!("rows={} round_trip=ok mode={}", rows.len(), m.mode().as_str());
    Ok(0)
}

fn denormalize(root: &Path, only: bool) -> Result<u8> {
    let mut ws = Workspace::open(root)?;
    let _lock = ws.lock()?;
    if !ws.has(INCIDENCE) {
        bail!("workspace has no incidence table; run `normalize` first");
    }
    let rows = read_incidence(ws.reader(INCIDENCE)?)?;
    let elements = to_quadruple(&rows)?;
    if to_normalized(&elements) != rows {
        println!("elements={} round_trip=failed", elements.len());
        return Ok(FINDINGS);
    }
    let mut body = Vec::new();
    write_elements(&mut body, &elements)?;
    let mut m = Mesh::new();
    bulk_load(&mut m, ws.reader(VERTICES)?, TargetTable::Vertices, CheckMode::Deferred)?;
    bulk_load(&mut m, &body[..], TargetTable::Elements, CheckMode::Deferred)?;
    m.set_mode(if only { RepresentationMode::QuadrupleOnly } else { RepresentationMode::Dual });
    ws.save_mesh(&m)?;
    println!("elements={} round_trip=ok mode={}", elements.len(), m.mode().as_str());
    Ok(0)
}

fn index_build(root: &Path, bits: u32) -> Result<u8> {
    let mut ws = Workspace::open(root)?;
    let _lock = ws.lock()?;
    let m = ws.load_mesh()?;
    let idx = SpatialIndex::build(&m, bits)?;
    ws.write_with(CELLS, |w| write_cells(w, &idx.cells))?;
    ws.write_with(MORTON, |w| write_morton(w, &idx.keys))?;
    ws.set("indexed", 1);
    ws.set("morton_bits", bits);
    ws.save_manifest()?;
    println!("cells={} index_entries={} morton_bits={bits}", idx.cells.len(), idx.index.len());
    Ok(0)
}

fn parse_point(s: &str) -> Result<QueryPoint> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().with_context(|| format!("`{c}` is not a number")))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [x, y, z] => Ok(QueryPoint::new(*x, *y, *z)),
        _ => bail!("--point needs three comma-separated coordinates"),
    }
}

fn locate(root: &Path, point: &str) -> Result<u8> {
    let p = parse_point(point)?;
    let ws = Workspace::open(root)?;
    if !ws.has(CELLS) {
        bail!("workspace has no spatial index; run `index build` first");
    }
    let m = ws.load_mesh()?;
    let cells = read_cells(ws.reader(CELLS)?)?;
    let idx = IntervalIndex::build(&cells);
    for id in point_locate(p, &m, &cells, &idx)? {
        println!("{id}");
    }
    Ok(0)
}

fn partition(root: &Path, bootstrap: usize, target: usize, opts: RefineOptions) -> Result<u8> {
    let mut ws = Workspace::open(root)?;
    let _lock = ws.lock()?;
    let m = ws.load_mesh()?;
    let g = element_adjacency_graph(&m);
    let boot = rcb(&m, bootstrap)?;
    print!("{}", BalanceReport::new(&g, &boot)?);
    let refined = refine(&g, &boot, target, opts)?;
    print!("{}", BalanceReport::new(&g, &refined)?);
    ws.save_partition(&refined, bootstrap)?;
    Ok(0)
}

fn scatter_cmd(root: &Path, out: &Path) -> Result<u8> {
    let ws = Workspace::open(root)?;
    let m = ws.load_mesh()?;
    let pm = ws.load_partition()?;
    let halos = compute_halos(&m, &pm)?;
    let (topo, cls, store) = ws.load_attributes()?;
    let src = ws.has_attributes().then_some(AttributeSource { store: &store, classification: &cls, topology: &topo });
    let report = scatter(&m, &pm, &halos, src, out)?;
    println!("bundles={} parts={} stage={}", report.directories.len(), pm.parts(), pm.stage().as_str());
    for ((p, dir), size) in report.directories.iter().enumerate().zip(&report.sizes) {
        let h = &halos.parts[p];
        println!(
            "bundle partition={p} bootstrap={} elements={size} vertices={} ghosts={} path={}",
            pm.ancestry()[p],
            h.required.len(),
            h.ghosts.len(),
            dir.display()
        );
    }
    for (b, parts) in &report.groups {
        let list: Vec<String> = parts.iter().map(u32::to_string).collect();
        println!("group bootstrap={b} partitions={}", list.join(","));
    }
    Ok(0)
}

fn gather_cmd(root: &Path, input: &Path, loaders: usize, staging: Option<PathBuf>) -> Result<u8> {
    let ws = Workspace::open(root)?;
    let _lock = ws.lock()?;
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .with_context(|| format!("reading {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path().join(RESULTS)))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no part-*/{RESULTS} files under {}", input.display());
    }
    let staging = staging.unwrap_or_else(|| ws.path("staging"));
    let (table, report) = gather(&files, &staging, loaders)?;
    let s = table.state_vars.unwrap_or(0);
    ws.write_with(RESULTS, |w| {
        let mut t = TableWriter::new(w, &result_schema(s))?;
        for ((e, sample), values) in &table.rows {
            let mut row = vec![Field::Int(e.0 as i64), Field::Int(*sample as i64)];
            row.extend(values.iter().map(|&v| Field::Float(v)));
            t.write_row(&row)?;
        }
        t.finish().map(|_| ())
    })?;
    println!("rows={} files={} state_vars={s} peak_loaders={}", report.rows, report.files, report.peak_loaders);
    Ok(0)
}

fn topo_ref(a: &TopoArg) -> Result<TopoRef> {
    let kind = TopoKind::parse(&a.kind).ok_or_else(|| anyhow!("unknown topology kind `{}`", a.kind))?;
    Ok(TopoRef::new(kind, a.id))
}

fn targets(t: &MeshTarget, m: &Mesh) -> Vec<MeshEntity> {
    if let Some(e) = t.element {
        vec![MeshEntity::Element(ElemId(e))]
    } else if let Some(v) = t.vertex {
        vec![MeshEntity::Vertex(VertexId(v))]
    } else {
        m.elements().map(|e| MeshEntity::Element(e.id)).collect()
    }
}

fn format_value(v: &AttrValue) -> String {
    match v {
        AttrValue::Scalar(x) => format_float(*x),
        AttrValue::Vector(xs) => xs.iter().map(|&x| format_float(x)).collect::<Vec<_>>().join(","),
        AttrValue::Expression(s) => format!("{s:?}"),
    }
}

fn print_resolved(entity: MeshEntity, r: &ResolvedAttribute) {
    println!(
        "entity={entity} name={} value={} context={} provenance={} distance={}",
        r.name,
        format_value(&r.value),
        r.context.as_str(),
        r.provenance,
        r.distance
    );
}

fn attr(root: &Path, cmd: AttrCmd) -> Result<u8> {
    let mut ws = Workspace::open(root)?;
    let (mut topo, mut cls, mut store) = ws.load_attributes()?;
    match cmd {
        AttrCmd::Entity { at, boundary } => {
            let _lock = ws.lock()?;
            let e = topo_ref(&at)?;
            topo.add_entity(e, &boundary)?;
            ws.save_attributes(&topo, &cls, &store)?;
            println!("entity={e} boundary={}", boundary.len());
        }
        AttrCmd::Classify { target, at } => {
            let _lock = ws.lock()?;
            let t = topo_ref(&at)?;
            let m = ws.load_mesh()?;
            let entities = targets(&target, &m);
            for &e in &entities {
                let known = match e {
                    MeshEntity::Element(id) => m.element(id).is_some(),
                    MeshEntity::Vertex(id) => m.vertex(id).is_some(),
                };
                if !known {
                    bail!("{e} is not in the mesh");
                }
                cls.classify(&topo, e, t)?;
            }
            ws.save_attributes(&topo, &cls, &store)?;
            println!("classified={} target={t}", entities.len());
        }
        AttrCmd::Assign { at, name, value, expr, scope, context, group } => {
            let _lock = ws.lock()?;
            let e = topo_ref(&at)?;
            let value = match (value, expr) {
                (_, Some(x)) => AttrValue::Expression(x),
                (Some(v), None) => {
                    let xs: Vec<f64> = v
                        .split(',')
                        .map(|c| c.trim().parse::<f64>().with_context(|| format!("`{c}` is not a number")))
                        .collect::<Result<_>>()?;
                    if xs.len() == 1 {
                        AttrValue::Scalar(xs[0])
                    } else {
                        AttrValue::Vector(xs)
                    }
                }
                (None, None) => bail!("pass --value or --expr"),
            };
            let scope = scope
                .iter()
                .map(|s| TopoKind::parse(s).ok_or_else(|| anyhow!("unknown scope kind `{s}`")))
                .collect::<Result<BTreeSet<_>>>()?;
            let mut b = AttributeBinding::new(name.clone(), value, scope)
                .with_context(CoordSystem::parse(&context).ok_or_else(|| anyhow!("unknown context `{context}`"))?);
            b.group = group;
            store.assign(&topo, e, b)?;
            ws.save_attributes(&topo, &cls, &store)?;
            println!("assigned name={name} entity={e}");
        }
        AttrCmd::Resolve { target, name } => {
            let m = ws.load_mesh()?;
            let names = match name {
                Some(n) => vec![n],
                None => store.element_attribute_names(),
            };
            let mut failures = 0;
            for e in targets(&target, &m) {
                for n in &names {
                    match store.resolve(e, n, &cls, &topo) {
                        Ok(r) => print_resolved(e, &r),
                        Err(
                            err @ (AttrError::NotFound { .. }
                            | AttrError::Ambiguous { .. }
                            | AttrError::Unclassified(_)),
                        ) => {
                            failures += 1;
                            println!("entity={e} name={n} error={err}");
                        }
                        Err(err) => return Err(err.into()),
                    }
                }
            }
            return Ok(if failures == 0 { 0 } else { FINDINGS });
        }
    }
    Ok(0)
}

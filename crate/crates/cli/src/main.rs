//! Command-line front end for building, verifying, querying and exporting labyrinth scenes.
//!
//! Exit status: 0 on success or a passing check, 1 when a check fails, 2 on
//! usage or input errors. `LABYRINTH_THREADS` caps the worker pool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use labyrinth::cmc::{self, default_neck_scale};
use labyrinth::complex::CellAddress;
use labyrinth::geom::Point3;
use labyrinth::io::{self as lio, MeshFormat};
use labyrinth::mesh::Mesh;
use labyrinth::query::{self, ChiSeed, Location};
use labyrinth::scaffold::{build_delta, build_delta_with, DomainScene, TubeSchedule, DEFAULT_RESOLUTION, MIN_RESOLUTION};
use labyrinth::verify::{self, VerificationReport};
use labyrinth::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "labyrinth", version, about = "Labyrinth domain construction and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a scene and save it as JSON.
    Build {
        #[arg(long)]
        levels: u32,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run verification checks.
    Verify(VerifyArgs),
    /// Point, curve and region queries.
    Query(QueryArgs),
    /// Constant-mean-curvature profiles, barriers and the nested-sphere surface.
    Barrier(BarrierArgs),
    /// Export scene elements as a mesh.
    Export {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value = "delta,gamma")]
        kinds: String,
        #[arg(long, default_value = "obj")]
        format: String,
        /// Restrict to one level.
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Counts,
    Size,
    Linking,
    Disjoint,
    Traversal,
    Nesting,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    check: Check,
    #[arg(long, default_value_t = 5)]
    levels: u32,
    #[arg(long, num_args = 1.., default_values_t = [0.125])]
    delta: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    trials: u32,
    #[arg(long, default_value_t = 1000)]
    samples: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    /// Override the Ñ tube factor (nesting check).
    #[arg(long)]
    ntilde_factor: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QueryKind {
    Locate,
    Distance,
    Profile,
    Classify,
    Chi,
    Limitset,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(value_enum)]
    kind: QueryKind,
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, num_args = 3, allow_negative_numbers = true, value_names = ["X", "Y", "Z"])]
    point: Option<Vec<f64>>,
    /// Polyline text file: one `x y z` per line, optional `closed` line.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Cell addresses seeding a χ query.
    #[arg(long, num_args = 1..)]
    cell: Vec<String>,
    /// χ generation.
    #[arg(long, default_value_t = 1)]
    i: u32,
    #[arg(long, default_value_t = query::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0.125)]
    delta: f64,
    #[arg(long, default_value_t = 0.15)]
    epsilon: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BarrierKind {
    Profile,
    Fit,
    Sweep,
    Remark,
}

#[derive(Args)]
struct BarrierArgs {
    #[arg(value_enum)]
    kind: BarrierKind,
    #[arg(long = "H", default_value_t = cmc::NODOID_H, allow_negative_numbers = true)]
    h: f64,
    #[arg(long, default_value_t = cmc::NODOID_C, allow_negative_numbers = true)]
    c: f64,
    #[arg(long, default_value_t = 10.0)]
    s_max: f64,
    #[arg(long, default_value_t = cmc::DEFAULT_STEP)]
    step: f64,
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long = "H0", default_value_t = 10.0)]
    h0: f64,
    #[arg(long, num_args = 3, allow_negative_numbers = true, default_values_t = [0.0, 0.0, 1.0])]
    p: Vec<f64>,
    /// Sweep rotation axis.
    #[arg(long, num_args = 3, allow_negative_numbers = true, default_values_t = [1.0, 0.0, 0.0])]
    axis: Vec<f64>,
    /// Sweep target points (polyline text format).
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    resolution: f64,
    #[arg(long, default_value_t = 6)]
    levels: u32,
    /// Mesh (`.obj`/`.ply`) or, for `profile`, a text table.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn print_json<T: serde::Serialize>(v: &T) -> Outcome {
    print!("{}", lio::to_json_pretty(v)?);
    Ok(())
}

fn point_arg(v: &Option<Vec<f64>>) -> Result<Point3, Failure> {
    match v {
        Some(v) if v.len() == 3 => Ok(Point3::new(v[0], v[1], v[2])),
        _ => Err(Failure::Usage("--point x y z is required".into())),
    }
}

fn vec3(v: &[f64]) -> Point3 {
    Point3::new(v[0], v[1], v[2])
}

fn scene_arg(path: &Option<PathBuf>) -> Result<DomainScene, Failure> {
    let p = path.as_ref().ok_or_else(|| Failure::Usage("--scene is required".into()))?;
    Ok(lio::load_scene(p)?)
}

fn curve_arg(path: &Option<PathBuf>) -> Result<(Vec<Point3>, bool), Failure> {
    let p = path.as_ref().ok_or_else(|| Failure::Usage("--curve is required".into()))?;
    let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
    Ok(lio::parse_polyline(&text)?)
}

fn mesh_format(path: &Path) -> Result<MeshFormat, Failure> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    Ok(ext.parse()?)
}

fn write_mesh(mesh: &Mesh, name: &str, path: &Path) -> Outcome {
    let format = mesh_format(path)?;
    let groups = vec![(name.to_string(), mesh.clone(), Vec::new())];
    lio::write_atomic(path, lio::mesh_string(&groups, format).as_bytes())?;
    Ok(())
}

fn run_check(check: Check, a: &VerifyArgs) -> Result<VerificationReport, Failure> {
    Ok(match check {
        Check::Counts => verify::check_counts(a.levels)?,
        Check::Size => verify::check_lemma_size(a.levels, &a.delta)?,
        Check::Linking => verify::check_linking(a.levels, a.tol)?,
        Check::Disjoint => verify::check_disjoint_and_proper(a.levels)?,
        Check::Traversal => verify::check_traversal(a.levels, a.trials, a.seed)?,
        Check::Nesting => match a.ntilde_factor {
            None => verify::check_nesting(a.levels, a.samples, a.seed)?,
            Some(f) => {
                let tubes = TubeSchedule { ntilde_factor: f, ..TubeSchedule::default() };
                let scene = build_delta_with(a.levels, MIN_RESOLUTION, tubes)?;
                verify::check_nesting_scene(&scene, a.samples, a.seed)?
            }
        },
        Check::All => unreachable!("expanded by the caller"),
    })
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let checks = match a.check {
        Check::All => vec![Check::Counts, Check::Size, Check::Linking, Check::Disjoint, Check::Traversal, Check::Nesting],
        c => vec![c],
    };
    let reports = checks.iter().map(|c| run_check(*c, a)).collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.passed());
    let text = if reports.len() == 1 { lio::to_json_pretty(&reports[0])? } else { lio::to_json_pretty(&reports)? };
    match &a.report {
        Some(path) => {
            lio::write_atomic(path, text.as_bytes())?;
            for r in &reports {
                println!("{}: {}", r.check, if r.passed() { "PASS" } else { "FAIL" });
            }
        }
        None => print!("{text}"),
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_query(a: &QueryArgs) -> Outcome {
    match a.kind {
        QueryKind::Locate => {
            let p = point_arg(&a.point)?;
            let loc = match &a.scene {
                Some(_) => query::locate(&p, &scene_arg(&a.scene)?, a.tol)?,
                None => match query::locate_cell(&p)? {
                    c if c == CellAddress::CORE => Location::CoreBall,
                    c => Location::Cell(c),
                },
            };
            print_json(&loc)
        }
        QueryKind::Distance => {
            let scene = scene_arg(&a.scene)?;
            let p = point_arg(&a.point)?;
            let (d, id) = query::distance_to_delta(&p, &scene).ok_or_else(|| Failure::Usage("scene has no Δ".into()))?;
            print_json(&json!({"distance": d, "element": id.to_string()}))
        }
        QueryKind::Profile => {
            let scene = scene_arg(&a.scene)?;
            let (pts, _) = curve_arg(&a.curve)?;
            print_json(&query::crossing_profile(&pts, &scene)?)
        }
        QueryKind::Classify => {
            let scene = scene_arg(&a.scene)?;
            let (pts, closed) = curve_arg(&a.curve)?;
            print_json(&query::classify_closed_curve(&pts, closed, a.tol, &scene)?)
        }
        QueryKind::Chi => {
            let scene = scene_arg(&a.scene)?;
            let seed = if !a.cell.is_empty() {
                let cells = a.cell.iter().map(|s| s.parse::<CellAddress>()).collect::<Result<Vec<_>, _>>()?;
                ChiSeed::Cells(cells)
            } else if a.curve.is_some() {
                ChiSeed::Polyline(curve_arg(&a.curve)?.0)
            } else {
                ChiSeed::Polyline(vec![point_arg(&a.point)?])
            };
            print_json(&query::chi(&seed, a.i, &scene)?)
        }
        QueryKind::Limitset => {
            let (pts, _) = curve_arg(&a.curve)?;
            print_json(&query::estimate_limit_set(&pts, a.delta, a.epsilon)?)
        }
    }
}

fn cmd_barrier(a: &BarrierArgs) -> Outcome {
    match a.kind {
        BarrierKind::Profile => {
            let prof = cmc::integrate_cmc_profile(a.h, a.c, a.s_max, a.step)?;
            if let Some(out) = &a.out {
                lio::write_atomic(out, prof.table().as_bytes())?;
            }
            print_json(&json!({
                "H": prof.h,
                "c": prof.c,
                "samples": prof.len(),
                "truncated": prof.truncated,
                "first_integral_drift": prof.first_integral_drift(),
                "mean_curvature_deviation": prof.mean_curvature_deviation(10.0 * a.step),
                "ode_residual": prof.ode_residual(),
            }))
        }
        BarrierKind::Fit | BarrierKind::Sweep => {
            let b = cmc::fit_barrier(a.delta, a.epsilon, a.h0, &vec3(&a.p))?;
            if let Some(out) = &a.out {
                write_mesh(&b.mesh, "barrier", out)?;
            }
            if a.kind == BarrierKind::Fit {
                return print_json(&json!({
                    "lambda": b.lambda,
                    "min_mean_curvature": b.min_mean_curvature,
                    "orientation": b.orientation,
                    "samples_checked": b.samples_checked,
                    "containment_violations": b.containment_violations,
                    "boundary_error": b.boundary_error,
                }));
            }
            let (pts, _) = curve_arg(&a.curve)?;
            let theta = cmc::sweep_first_contact(&b, &pts, &vec3(&a.axis), a.resolution)?;
            print_json(&json!({ "theta0": theta, "resolution": a.resolution }))
        }
        BarrierKind::Remark => {
            let s = cmc::remark_surface(a.levels, &default_neck_scale)?;
            if let Some(out) = &a.out {
                write_mesh(&s.mesh, "remark", out)?;
            }
            print_json(&s.report)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build { levels, resolution, out } => {
            let scene = build_delta(levels, resolution)?;
            lio::save_scene(&scene, &out)?;
            println!("{} elements, {} levels -> {}", scene.elements.len(), levels, out.display());
            Ok(())
        }
        Command::Verify(a) => cmd_verify(&a),
        Command::Query(a) => cmd_query(&a),
        Command::Barrier(a) => cmd_barrier(&a),
        Command::Export { scene, kinds, format, level, out } => {
            let format: MeshFormat = format.parse()?;
            let kinds = lio::parse_kinds(&kinds)?;
            let scene = lio::load_scene(&scene)?;
            let n = lio::export_mesh(&scene, &kinds, level, format, &out)?;
            println!("{n} groups -> {}", out.display());
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("LABYRINTH_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Failure::Usage(format!("LABYRINTH_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
    }
}

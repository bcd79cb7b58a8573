//! `rgjk`: distance queries, pose checks, timing benchmarks and hull
//! preprocessing from the command line.
//!
//! Exit status: 0 when the command ran (whatever the verdict), 2 on usage or
//! validation errors, 3 when `--strict` is set and a query did not converge.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rgjk::bench::{run_bench, write_csv, BenchConfig, BenchReport};
use rgjk::gjk::{gjk_distance, Placed};
use rgjk::mesh::{self, HullPolicy, VertexGraph, WeldMode};
use rgjk::world::{load_robot, CollisionReport, Robot, RobotOptions};
use rgjk::{fixtures, CheckMode, GjkConfig, LimitMode, SupportHint, SupportStrategy, Transform, Vec3};
use serde::Serialize;

const EXIT_USAGE: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "rgjk", version, about = "GJK distance queries and robot self-collision checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two convex meshes.
    Distance(DistanceArgs),
    /// Self-collision check of a robot at one joint vector (all pairs).
    Check(CheckArgs),
    /// Time update-and-check over seeded random poses.
    Bench(BenchArgs),
    /// Convex hull of a mesh's vertices.
    Hull(HullArgs),
    /// Write a built-in synthetic robot (URDF plus STL meshes).
    Fixture(FixtureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Exhaustive,
    HillClimb,
}

impl From<Strategy> for SupportStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Exhaustive => SupportStrategy::Exhaustive,
            Strategy::HillClimb => SupportStrategy::HillClimb,
        }
    }
}

#[derive(Args)]
struct MeshOptions {
    /// Replace non-convex meshes by their convex hull instead of rejecting them.
    #[arg(long)]
    allow_nonconvex: bool,
    /// Replace every mesh by its convex hull.
    #[arg(long)]
    hull: bool,
    /// Weld STL vertices closer than this distance (default: exact equality).
    #[arg(long, value_name = "METERS")]
    weld_epsilon: Option<f64>,
}

impl MeshOptions {
    fn policy(&self) -> HullPolicy {
        match (self.hull, self.allow_nonconvex) {
            (true, _) => HullPolicy::Always,
            (false, true) => HullPolicy::HullIfNonConvex,
            (false, false) => HullPolicy::Reject,
        }
    }

    fn weld(&self) -> Result<WeldMode> {
        match self.weld_epsilon {
            None => Ok(WeldMode::Exact),
            Some(e) if e.is_finite() && e >= 0.0 => Ok(WeldMode::Epsilon(e)),
            Some(e) => bail!("--weld-epsilon must be finite and non-negative, got {e}"),
        }
    }
}

#[derive(Args)]
struct QueryOptions {
    /// Support-point search.
    #[arg(long, value_enum, default_value = "hill-climb")]
    strategy: Strategy,
    /// GJK iteration cap per query.
    #[arg(long, default_value_t = GjkConfig::default().max_iterations)]
    max_iterations: u32,
    /// Exit with status 3 if any query fails to converge.
    #[arg(long)]
    strict: bool,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

impl QueryOptions {
    fn config(&self) -> Result<GjkConfig> {
        let cfg = GjkConfig {
            max_iterations: self.max_iterations,
            ..GjkConfig::with_strategy(self.strategy.into())
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RobotArgs {
    /// URDF file.
    urdf: PathBuf,
    /// Directory that `package://` mesh URIs resolve against.
    #[arg(long, value_name = "DIR")]
    package_root: Option<PathBuf>,
    /// Pairs within this distance count as colliding.
    #[arg(long, default_value_t = 0.0, value_name = "METERS")]
    epsilon: f64,
    /// Also query pairs of links that share a joint.
    #[arg(long)]
    no_adjacent_exclusion: bool,
    #[command(flatten)]
    mesh: MeshOptions,
}

impl RobotArgs {
    fn load(&self, cfg: GjkConfig) -> Result<Robot> {
        let opts = RobotOptions {
            package_root: self.package_root.clone(),
            hull: self.mesh.policy(),
            weld: self.mesh.weld()?,
            exclude_adjacent: !self.no_adjacent_exclusion,
        };
        let mut robot = load_robot(&self.urdf, &opts)?;
        robot.world.set_epsilon(self.epsilon)?;
        robot.world.set_config(cfg);
        log::info!(
            "loaded {}: {} joints, {} components, {} pairs",
            robot.chain.name,
            robot.chain.dof(),
            robot.world.components().len(),
            robot.world.pair_count()
        );
        Ok(robot)
    }
}

#[derive(Args)]
struct DistanceArgs {
    /// First mesh (STL or JSON graph).
    mesh_a: PathBuf,
    /// Second mesh (STL or JSON graph).
    mesh_b: PathBuf,
    /// Pose of the first mesh: "x,y,z" or "x,y,z,roll,pitch,yaw" (meters, radians).
    #[arg(long, value_name = "POSE", allow_hyphen_values = true)]
    ta: Option<String>,
    /// Pose of the second mesh, same format as --ta.
    #[arg(long, value_name = "POSE", allow_hyphen_values = true)]
    tb: Option<String>,
    #[command(flatten)]
    mesh: MeshOptions,
    #[command(flatten)]
    query: QueryOptions,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    robot: RobotArgs,
    /// Joint values in joint-vector order (radians or meters).
    #[arg(allow_negative_numbers = true, value_name = "THETA")]
    theta: Vec<f64>,
    /// Read revolute and continuous values as degrees.
    #[arg(long)]
    degrees: bool,
    /// Clamp out-of-limit values instead of rejecting them.
    #[arg(long)]
    clamp: bool,
    #[command(flatten)]
    query: QueryOptions,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    EarlyExit,
    Exhaustive,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    robot: RobotArgs,
    /// Number of random poses.
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    poses: u64,
    /// Seed of the pose generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write per-pose samples to this CSV file.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Sweep mode per pose.
    #[arg(long, value_enum, default_value = "early-exit")]
    mode: Mode,
    /// Spread pair queries over threads (exhaustive; not comparable to single-thread timings).
    #[arg(long)]
    parallel: bool,
    #[command(flatten)]
    query: QueryOptions,
}

#[derive(Args)]
struct HullArgs {
    /// Input mesh (STL or JSON graph).
    input: PathBuf,
    /// Output STL.
    output: PathBuf,
    /// Also write the hull graph as JSON.
    #[arg(long, value_name = "PATH")]
    graph_json: Option<PathBuf>,
    /// Write ASCII instead of binary STL.
    #[arg(long)]
    ascii: bool,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FixtureArgs {
    /// Fixture name (see --list).
    #[arg(required_unless_present = "list")]
    name: Option<String>,
    /// Output directory.
    #[arg(required_unless_present = "list")]
    dir: Option<PathBuf>,
    /// List available fixtures.
    #[arg(long)]
    list: bool,
}

/// A JSON document tagged with its schema id.
#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    schema: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

fn print_json<T: Serialize>(schema: &'static str, body: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&Tagged { schema, body })?);
    Ok(())
}

fn parse_pose(text: &str) -> Result<Transform> {
    let vals: Vec<f64> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("bad number `{t}` in pose `{text}`")))
        .collect::<Result<_>>()?;
    if vals.iter().any(|v| !v.is_finite()) {
        bail!("pose `{text}` has a non-finite value");
    }
    match vals[..] {
        [x, y, z] => Ok(Transform::from_translation(Vec3::new(x, y, z))),
        [x, y, z, r, p, w] => Ok(Transform::from_xyz_rpy(Vec3::new(x, y, z), Vec3::new(r, p, w))),
        _ => bail!("pose `{text}` needs 3 or 6 values, got {}", vals.len()),
    }
}

fn load_mesh(path: &Path, opts: &MeshOptions) -> Result<VertexGraph> {
    let graph = mesh::load_graph_file(path, opts.weld()?)?;
    Ok(mesh::prepare_convex(graph, opts.policy(), &path.display().to_string())?)
}

#[derive(Serialize)]
struct DistanceOutput {
    distance: f64,
    colliding: bool,
    closest_a: [f64; 3],
    closest_b: [f64; 3],
    iterations: u32,
    support_calls: u32,
    converged: bool,
    strategy: SupportStrategy,
    vertices: [usize; 2],
}

fn cmd_distance(args: &DistanceArgs) -> Result<u8> {
    let a = load_mesh(&args.mesh_a, &args.mesh)?;
    let b = load_mesh(&args.mesh_b, &args.mesh)?;
    let pose = |p: &Option<String>| p.as_deref().map_or(Ok(Transform::identity()), parse_pose);
    let (ta, tb) = (pose(&args.ta)?, pose(&args.tb)?);
    let cfg = args.query.config()?;
    let r = gjk_distance(&Placed::new(&a, ta), &Placed::new(&b, tb), &cfg, &mut SupportHint::default())?;
    let out = DistanceOutput {
        distance: r.distance,
        colliding: r.colliding,
        closest_a: r.closest_p.into(),
        closest_b: r.closest_q.into(),
        iterations: r.iterations,
        support_calls: r.support_calls,
        converged: r.converged,
        strategy: cfg.support_strategy,
        vertices: [a.len(), b.len()],
    };
    if args.query.json {
        print_json("rgjk.distance/1", &out)?;
    } else {
        println!("distance   {}", out.distance);
        println!("colliding  {}", out.colliding);
        println!("closest a  {:?}", out.closest_a);
        println!("closest b  {:?}", out.closest_b);
        println!(
            "iterations {} ({} support calls, {})",
            out.iterations,
            out.support_calls,
            if out.converged { "converged" } else { "NOT converged" }
        );
    }
    Ok(if args.query.strict && !r.converged { EXIT_NONCONVERGED } else { 0 })
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    robot: &'a str,
    theta: &'a [f64],
    epsilon: f64,
    colliding: bool,
    min_distance: Option<f64>,
    all_converged: bool,
    excluded_pairs: Vec<(&'a str, &'a str)>,
    pairs: &'a CollisionReport,
}

fn cmd_check(args: &CheckArgs) -> Result<u8> {
    let mut robot = args.robot.load(args.query.config()?)?;
    let mut theta = args.theta.clone();
    if args.degrees {
        let angular: Vec<bool> = robot.chain.active_joints().map(|j| j.kind.is_angular()).collect();
        for (x, angular) in theta.iter_mut().zip(angular) {
            if angular {
                *x = x.to_radians();
            }
        }
    }
    let mode = if args.clamp { LimitMode::Clamp } else { LimitMode::Strict };
    robot.update_pose(&theta, mode)?;
    let report = robot.world.check_collisions(CheckMode::Exhaustive)?;
    let out = CheckOutput {
        robot: &robot.chain.name,
        theta: &theta,
        epsilon: robot.world.epsilon(),
        colliding: report.colliding,
        min_distance: report.min_distance(),
        all_converged: report.all_converged(),
        excluded_pairs: robot.world.excluded_pairs(),
        pairs: &report,
    };
    if args.query.json {
        print_json("rgjk.check/1", &out)?;
    } else {
        println!(
            "{}: {} pairs queried, {} excluded, epsilon {}",
            out.robot,
            report.pairs.len(),
            out.excluded_pairs.len(),
            out.epsilon
        );
        let width = report
            .pairs
            .iter()
            .map(|p| p.name_i.len() + p.name_j.len() + 3)
            .max()
            .unwrap_or(4);
        println!("{:<width$}  {:>14}  {:>4}  {:>5}", "pair", "distance", "iter", "calls");
        for p in &report.pairs {
            let name = format!("{} - {}", p.name_i, p.name_j);
            let flag = match (p.colliding, p.converged) {
                (true, _) => "  COLLIDING",
                (false, false) => "  not converged",
                _ => "",
            };
            println!(
                "{name:<width$}  {:>14.9}  {:>4}  {:>5}{flag}",
                p.distance, p.iterations, p.support_calls
            );
        }
        let hits = report.pairs.iter().filter(|p| p.colliding).count();
        match (report.colliding, out.min_distance) {
            (true, _) => println!("verdict: COLLISION ({hits} pairs within epsilon)"),
            (false, Some(d)) => println!("verdict: free (minimum distance {d:.9})"),
            (false, None) => println!("verdict: free (no pairs)"),
        }
    }
    Ok(if args.query.strict && !out.all_converged { EXIT_NONCONVERGED } else { 0 })
}

fn cmd_bench(args: &BenchArgs) -> Result<u8> {
    let mut robot = args.robot.load(args.query.config()?)?;
    let cfg = BenchConfig {
        poses: args.poses as usize,
        seed: args.seed,
        mode: match args.mode {
            Mode::EarlyExit => CheckMode::EarlyExit,
            Mode::Exhaustive => CheckMode::Exhaustive,
        },
        parallel: args.parallel,
        keep_samples: args.csv.is_some(),
    };
    let mut report: BenchReport = run_bench(&mut robot, &cfg)?;
    if let (Some(path), Some(samples)) = (&args.csv, report.samples.take()) {
        let mut file = std::io::BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        write_csv(&samples, &mut file).with_context(|| format!("writing {}", path.display()))?;
    }
    if args.query.json {
        print_json("rgjk.bench/1", &report)?;
    } else {
        println!(
            "{}: {:.4} ± {:.4} ms per pose over {} poses (seed {}, {}, {})",
            report.robot,
            report.mean_ms,
            report.std_ms,
            report.poses,
            report.seed,
            report.mode.replace('_', "-"),
            match report.strategy {
                SupportStrategy::Exhaustive => "exhaustive",
                SupportStrategy::HillClimb => "hill-climb",
            }
        );
        println!(
            "  colliding poses {:>6}: {:.4} ± {:.4} ms",
            report.colliding.count, report.colliding.mean_ms, report.colliding.std_ms
        );
        println!(
            "  free poses      {:>6}: {:.4} ± {:.4} ms",
            report.free.count, report.free.mean_ms, report.free.std_ms
        );
        println!(
            "  {} pairs queried, {} excluded, epsilon {}, {} non-converged pair queries",
            report.queried_pairs, report.excluded_pairs, report.epsilon, report.nonconverged_pairs
        );
        println!("  first pose {:?}", report.first_pose);
    }
    Ok(if args.query.strict && report.nonconverged_pairs > 0 { EXIT_NONCONVERGED } else { 0 })
}

#[derive(Serialize)]
struct HullOutput {
    input_vertices: usize,
    hull_vertices: usize,
    hull_faces: usize,
    output: String,
}

fn cmd_hull(args: &HullArgs) -> Result<u8> {
    let graph = mesh::load_graph_file(&args.input, WeldMode::Exact)?;
    let hull = mesh::convex_hull(graph.vertices()).with_context(|| args.input.display().to_string())?;
    let soup = hull.to_soup();
    let bytes = if args.ascii {
        mesh::write_ascii_stl(&soup, "hull").into_bytes()
    } else {
        mesh::write_binary_stl(&soup)
    };
    fs::write(&args.output, bytes).with_context(|| format!("writing {}", args.output.display()))?;
    if let Some(path) = &args.graph_json {
        fs::write(path, hull.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    let out = HullOutput {
        input_vertices: graph.len(),
        hull_vertices: hull.len(),
        hull_faces: hull.faces().len(),
        output: args.output.display().to_string(),
    };
    if args.json {
        print_json("rgjk.hull/1", &out)?;
    } else {
        println!(
            "{} vertices -> hull of {} vertices, {} faces, written to {}",
            out.input_vertices, out.hull_vertices, out.hull_faces, out.output
        );
    }
    Ok(0)
}

fn cmd_fixture(args: &FixtureArgs) -> Result<u8> {
    if args.list {
        for name in fixtures::names() {
            println!("{name}");
        }
        return Ok(0);
    }
    let (Some(name), Some(dir)) = (&args.name, &args.dir) else {
        bail!("fixture name and output directory are required");
    };
    let Some(fixture) = fixtures::by_name(name) else {
        bail!("unknown fixture `{name}` (available: {})", fixtures::names().join(", "));
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let urdf = fixture.write_to(dir).with_context(|| format!("writing fixture to {}", dir.display()))?;
    println!("{}", urdf.display());
    let pose: Vec<String> = fixture.folded_pose.iter().map(|x| x.to_string()).collect();
    println!("self-colliding pose: {}", pose.join(" "));
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Distance(a) => cmd_distance(a),
        Command::Check(a) => cmd_check(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Hull(a) => cmd_hull(a),
        Command::Fixture(a) => cmd_fixture(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

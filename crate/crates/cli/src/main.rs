//! `disf`: batch front-end for object generation, preprocessing, planning,
//! benchmarking and feasibility checks.
//!
//! Exit codes: 0 ok, 2 usage or I/O error, 3 planner (or pipeline) failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use disf_core::baselines::run_method;
use disf_core::bench::{parse_manifest, plan_batch};
use disf_core::config::{GripperChoice, ToolkitConfig, TOOLKIT_VERSION};
use disf_core::grasp_eval::{apply_aperture_bias, geometric_feasibility, pre_grasp_pose, FeasibilityReport};
use disf_core::io::{load_cloud, save_cloud};
use disf_core::planner::{trace_to_csv, PlanContext, T0Mode};
use disf_core::pointcloud::{estimate_normals, orient_normals_outward, NormalEstimationParams};
use disf_core::preprocess::{preprocess_scene, ObjectFrameSpec, PreprocessSidecar};
use disf_core::{
    generate_synthetic_object, Error, GripperSpec, Method, ObjectModel, OrientedPointCloud, PlanResult, PointCloud,
    ShapeKind, Vec3,
};

#[derive(Parser, Debug)]
#[command(name = "disf", version, about = "Parallel-jaw grasp pose optimization on object point clouds")]
struct Cli {
    /// Seed for every random stage (k-means, CMA-ES, RANSAC, sampling).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Toolkit configuration JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (directory for `bench`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a synthetic object surface with analytic normals.
    GenObject(GenObjectArgs),
    /// Extract one object from a tabletop scene.
    Preprocess(PreprocessArgs),
    /// Optimize a grasp pose on an object.
    Plan(PlanArgs),
    /// Run all methods over an object manifest.
    Bench(BenchArgs),
    /// Geometric feasibility of a planned grasp.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct GenObjectArgs {
    /// box, cylinder, t_block, l_block or stem_glass.
    #[arg(long)]
    kind: String,
    /// Comma-separated dimensions in meters; shape defaults when omitted.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<f64>>,
    /// Number of surface samples.
    #[arg(long, default_value_t = 3000)]
    points: usize,
    /// Gaussian position noise (m).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Merged scene cloud (PLY or XYZ).
    #[arg(long)]
    scene: PathBuf,
    /// Cluster index, largest first.
    #[arg(long, default_value_t = 0)]
    target: usize,
    /// Object-frame origin in the table-aligned frame; requires --heading.
    #[arg(long, value_delimiter = ',', requires = "heading")]
    anchor: Option<Vec<f64>>,
    /// Point fixing the +x heading in the table-aligned frame.
    #[arg(long, value_delimiter = ',', requires = "anchor")]
    heading: Option<Vec<f64>>,
    /// Sidecar JSON path; defaults to the output path with a .json extension.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlanArgs {
    /// Object cloud with normals (PLY or XYZ).
    #[arg(long)]
    object: PathBuf,
    /// disf, visf or cmaes; overrides the config.
    #[arg(long)]
    method: Option<String>,
    /// Per-iteration trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Estimate normals when the object file has none.
    #[arg(long)]
    estimate_normals: bool,
    /// Explicit initial translation (m), replacing k-means initialization.
    #[arg(long, value_delimiter = ',')]
    t0: Option<Vec<f64>>,
    /// Initial rotation about the approach axis, in degrees.
    #[arg(long, allow_hyphen_values = true)]
    yaw_deg: Option<f64>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Lines of `name path`, `#` comments; paths relative to the manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Runs per object and method.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Subset of methods, comma-separated.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Estimate normals for objects whose files have none.
    #[arg(long)]
    estimate_normals: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Plan JSON written by `plan`.
    #[arg(long)]
    plan: PathBuf,
    /// Object cloud the plan was made on.
    #[arg(long)]
    object: PathBuf,
    /// Estimate normals when the object file has none.
    #[arg(long)]
    estimate_normals: bool,
}

/// Failures with their exit status.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Pipeline(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::InvalidParameter(_)
            | Error::MissingNormals
            | Error::EmptyCloud
            | Error::InvalidCloud(_) => Failure::Usage(e.into()),
            _ => Failure::Pipeline(e.into()),
        }
    }
}

type CmdResult = Result<ExitCode, Failure>;

#[derive(Serialize, Deserialize)]
struct PlanOutput {
    version: String,
    config: ToolkitConfig,
    object: String,
    result: PlanResult,
}

#[derive(Serialize)]
struct SidecarOutput<'a> {
    version: &'a str,
    config: &'a ToolkitConfig,
    scene: String,
    object: String,
    #[serde(flatten)]
    sidecar: &'a PreprocessSidecar,
}

#[derive(Serialize)]
struct PreGrasp {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    version: &'a str,
    config: &'a ToolkitConfig,
    plan: String,
    object: String,
    feasibility: FeasibilityReport,
    pre_grasp: PreGrasp,
    /// Aperture after applying the execution bias to the planned displacement.
    commanded_aperture: f64,
}

#[derive(Serialize)]
struct BenchSummaryOutput<'a> {
    version: &'a str,
    config: &'a ToolkitConfig,
    manifest: String,
    methods: Vec<&'static str>,
    #[serde(flatten)]
    summary: &'a disf_core::bench::BenchSummary,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(&cli) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    let mut config = match &cli.config {
        Some(path) => ToolkitConfig::load(path)?,
        None => ToolkitConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    match &cli.command {
        Command::GenObject(args) => gen_object(cli, args),
        Command::Preprocess(args) => preprocess(cli, args, &config),
        Command::Plan(args) => plan(cli, args, config),
        Command::Bench(args) => bench(cli, args, &config),
        Command::Check(args) => check(cli, args, &config),
    }
}

fn vec3(values: &[f64], flag: &str) -> Result<Vec3, Failure> {
    match values {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(anyhow!("--{flag} needs three comma-separated values, got {}", values.len()).into()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

/// Writes to `--out` when given, stdout otherwise.
fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(anyhow::Error::from(e).context("writing stdout").into()),
                _ => Ok(()),
            }
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(value).context("serializing output")?)
}

/// Config with the gripper preset expanded, as embedded in outputs.
fn resolved(config: &ToolkitConfig) -> Result<(ToolkitConfig, GripperSpec), Failure> {
    let spec = config.gripper.resolve()?;
    let mut c = config.clone();
    c.gripper = GripperChoice::Custom(spec.clone());
    Ok((c, spec))
}

fn load_object(path: &Path, estimate: bool) -> Result<OrientedPointCloud, Failure> {
    let cloud = load_cloud(path, None)?;
    if cloud.normals.is_some() {
        return Ok(cloud.into_oriented()?);
    }
    if !estimate {
        return Err(anyhow!("{} has no normals; pass --estimate-normals", path.display()).into());
    }
    info!("estimating normals for {} points", cloud.len());
    let est = estimate_normals(&cloud.points, &NormalEstimationParams::default())?;
    Ok(orient_normals_outward(&est, None))
}

fn gen_object(cli: &Cli, args: &GenObjectArgs) -> CmdResult {
    let kind: ShapeKind = args.kind.parse()?;
    let dims = args.dims.clone().unwrap_or_else(|| kind.default_dims());
    let cloud = generate_synthetic_object(kind, &dims, args.points, args.noise, cli.seed.unwrap_or(0))?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.ply", kind.name())));
    save_cloud(&out, &cloud.to_point_cloud(), None)?;
    let c = cloud.centroid();
    println!("points {}", cloud.len());
    println!("centroid {:.6} {:.6} {:.6}", c.x, c.y, c.z);
    Ok(ExitCode::SUCCESS)
}

fn preprocess(cli: &Cli, args: &PreprocessArgs, config: &ToolkitConfig) -> CmdResult {
    let scene: PointCloud = load_cloud(&args.scene, None)?;
    let frame = match (&args.anchor, &args.heading) {
        (Some(a), Some(h)) => Some(ObjectFrameSpec { anchor: vec3(a, "anchor")?.into(), heading_point: vec3(h, "heading")?.into() }),
        _ => None,
    };
    let approach = Vec3::from(config.plan.n_app);
    let out = preprocess_scene(&scene, &config.preprocess, &approach, args.target, frame)?;
    info!(
        "plane inliers {}, clusters {:?}, kept {} points",
        out.sidecar.plane_inliers, out.sidecar.cluster_sizes, out.sidecar.denoised_points
    );
    let object_path = cli.out.clone().unwrap_or_else(|| PathBuf::from("object.ply"));
    save_cloud(&object_path, &out.object.to_point_cloud(), None)?;
    let sidecar_path = args.sidecar.clone().unwrap_or_else(|| object_path.with_extension("json"));
    let doc = SidecarOutput {
        version: TOOLKIT_VERSION,
        config,
        scene: args.scene.display().to_string(),
        object: object_path.display().to_string(),
        sidecar: &out.sidecar,
    };
    write_text(&sidecar_path, &to_json(&doc)?)?;
    Ok(ExitCode::SUCCESS)
}

fn plan(cli: &Cli, args: &PlanArgs, mut config: ToolkitConfig) -> CmdResult {
    if let Some(m) = &args.method {
        config.method = m.parse::<Method>()?;
    }
    if let Some(t0) = &args.t0 {
        config.plan.t0_mode = T0Mode::Explicit;
        config.plan.explicit_t0 = vec3(t0, "t0")?.into();
    }
    if let Some(deg) = args.yaw_deg {
        let axis = nalgebra::Unit::new_normalize(Vec3::from(config.plan.n_app));
        let r = nalgebra::Rotation3::from_axis_angle(&axis, deg.to_radians()) * config.plan.initial_rotation();
        config.plan.set_initial_rotation(&r);
    }
    config.validate()?;
    let (config, spec) = resolved(&config)?;
    let object = load_object(&args.object, args.estimate_normals)?;
    let model = ObjectModel::new(object);
    info!("planning with {} on {} points", config.method.name(), model.cloud().len());
    let result = run_method(config.method, &model, &spec, &config.plan, &config.cmaes)?;
    info!("{:?} after {} iterations, {:.2} ms", result.termination, result.iterations, result.wall_time_ms);

    if let Some(path) = &args.trace {
        write_text(path, &trace_to_csv(&result.trace))?;
    }
    let failed = result.termination.is_failure();
    let doc = PlanOutput { version: TOOLKIT_VERSION.to_string(), config, object: args.object.display().to_string(), result };
    emit(cli.out.as_deref(), &to_json(&doc)?)?;
    if failed {
        eprintln!("planner failure: {:?}", doc.result.termination);
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(cli: &Cli, args: &BenchArgs, config: &ToolkitConfig) -> CmdResult {
    if args.repeats == 0 {
        return Err(anyhow!("--repeats must be at least 1").into());
    }
    let methods: Vec<Method> = match &args.methods {
        Some(names) => names.iter().map(|n| n.parse::<Method>()).collect::<Result<_, _>>()?,
        None => Method::ALL.to_vec(),
    };
    let text = fs::read_to_string(&args.manifest).with_context(|| format!("reading {}", args.manifest.display()))?;
    let (entries, errors) = parse_manifest(&text);
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("{}:{}: {}", args.manifest.display(), e.line, e.message);
        }
        return Err(anyhow!("{} manifest error(s)", errors.len()).into());
    }
    if entries.is_empty() {
        return Err(anyhow!("manifest {} lists no objects", args.manifest.display()).into());
    }
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let mut objects = Vec::with_capacity(entries.len());
    for entry in &entries {
        let path = base.join(&entry.path);
        objects.push((entry.name.clone(), load_object(&path, args.estimate_normals)?));
    }
    let (config, spec) = resolved(config)?;
    let report = plan_batch(&objects, &spec, &config.plan, &config.cmaes, &methods, args.repeats);
    for row in report.rows.iter().filter(|r| r.failed()) {
        warn!("{} / {} repeat {}: {}", row.object, row.method.name(), row.repeat, row.error.as_deref().unwrap_or(&row.termination));
    }

    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("bench_out"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_text(&dir.join("bench.csv"), &report.to_csv())?;
    let doc = BenchSummaryOutput {
        version: TOOLKIT_VERSION,
        config: &config,
        manifest: args.manifest.display().to_string(),
        methods: methods.iter().map(|m| m.name()).collect(),
        summary: &report.summary,
    };
    write_text(&dir.join("summary.json"), &to_json(&doc)?)?;
    for (method, s) in &report.summary.per_method {
        println!("{method}: {} runs, {} failed, median {:.2} ms", s.runs, s.failures, s.median_wall_ms);
    }
    Ok(ExitCode::SUCCESS)
}

fn check(cli: &Cli, args: &CheckArgs, config: &ToolkitConfig) -> CmdResult {
    let text = fs::read_to_string(&args.plan).with_context(|| format!("reading {}", args.plan.display()))?;
    let plan: PlanOutput = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.plan.display()))?;
    // The plan's own gripper and pad basis define the pose; execution
    // parameters come from the current configuration.
    let (_, spec) = resolved(&plan.config)?;
    let mut effective = plan.config.clone();
    effective.execution = config.execution.clone();
    effective.validate()?;

    let object = load_object(&args.object, args.estimate_normals)?;
    let model = ObjectModel::new(object);
    let ctx = PlanContext::new(&model, &spec, &effective.plan)?;
    let r = plan.result.rotation();
    let t = plan.result.translation();
    let state = ctx.state_at(r, t, plan.result.aperture);
    let surface = ctx.surface_for(&state);
    let feasibility = geometric_feasibility(&surface, &model, &spec, &effective.plan.matching, &effective.execution);

    let z_local = r.inverse() * Vec3::from(plan.result.z_axis);
    let pre = pre_grasp_pose(&r, &t, &z_local, effective.execution.gamma);
    let opening = plan.result.d0;
    let biased = apply_aperture_bias(plan.result.delta_d, effective.execution.aperture_bias, opening, &spec);
    let doc = CheckOutput {
        version: TOOLKIT_VERSION,
        config: &effective,
        plan: args.plan.display().to_string(),
        object: args.object.display().to_string(),
        feasibility,
        pre_grasp: PreGrasp {
            rotation: disf_core::geometry::rotation_to_rows(&pre.rotation),
            translation: pre.translation.into(),
        },
        commanded_aperture: opening + biased,
    };
    emit(cli.out.as_deref(), &to_json(&doc)?)?;
    Ok(ExitCode::SUCCESS)
}

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rhsim::experiment::{self, ExperimentSpec, DEFAULT_STRIDE};
use rhsim::integrate::IntegratorKind;
use rhsim::model::{check_geometry, parse_3dt, parse_robotics, RoboticsModel};
use rhsim::scenarios::{Scenario, ScenarioSetup, ROADHEADER_3DT, ROADHEADER_ROBOT};
use rhsim::service::{self, Documents};
use rhsim::sim::{self, ActionLog, Pose, SimConfig};
use rhsim::Error;

const EXIT_OTHER: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_MODEL: u8 = 4;
const EXIT_BLOWUP: u8 = 5;

#[derive(Parser)]
#[command(name = "sim", version, about = "Roadheader rigid-body simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an energy-drift or position-error experiment and write CSV.
    Run(RunArgs),
    /// Time physics-only frames.
    Bench(BenchArgs),
    /// Serve the live simulation over WebSocket.
    Serve(ServeArgs),
    /// Write forward-kinematics fixtures (q to body poses) as JSON.
    ExportFk(ExportFkArgs),
    /// Replay an action log and print one JSON snapshot per frame.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Robot description (.robot). Defaults to the bundled roadheader.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Render geometry (.3dt), checked against the model.
    #[arg(long)]
    geometry: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Energy,
    Position,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "pendulum")]
    scenario: Scenario,
    #[arg(long, default_value = "symplectic-euler")]
    integrator: IntegratorKind,
    /// Step size in seconds.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long, default_value_t = 100_000)]
    iters: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to position for arm-raise and energy otherwise.
    #[arg(long, value_enum)]
    experiment: Option<ExperimentKind>,
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    stride: usize,
    /// Perturb the initial q uniformly by up to this much (seeded by SIM_SEED).
    #[arg(long)]
    perturb: Option<f64>,
    #[arg(long, env = "SIM_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "full-roadheader")]
    scenario: Scenario,
    #[arg(long, default_value = "symplectic-euler")]
    integrator: IntegratorKind,
    #[arg(long, default_value_t = 600)]
    frames: usize,
    #[arg(long, default_value_t = 60)]
    warmup: usize,
    #[arg(long, default_value_t = 16)]
    substeps: usize,
    #[arg(long, default_value_t = 1.0 / 60.0)]
    dt: f64,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    #[arg(long, default_value = "symplectic-euler")]
    integrator: IntegratorKind,
    #[arg(long, default_value_t = 16)]
    substeps: usize,
    /// Snapshot rate in Hz; also the render step.
    #[arg(long, default_value_t = service::DEFAULT_RATE_HZ)]
    rate: f64,
}

#[derive(Args)]
struct ExportFkArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random configurations in addition to q = 0.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, env = "SIM_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Action log, one `t joint command` per line.
    #[arg(long)]
    log: PathBuf,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    #[arg(long, default_value = "symplectic-euler")]
    integrator: IntegratorKind,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => EXIT_PARSE,
        Error::Model(_) => EXIT_MODEL,
        Error::Integration(_) | Error::Dynamics(_) => EXIT_BLOWUP,
        Error::Config(_) | Error::Io(_) | Error::Csv(_) => EXIT_OTHER,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve(a),
        Command::ExportFk(a) => export_fk(a),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err((context, e)) => {
            eprintln!("error: {context}{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// An error plus the file it came from, if any.
type CliResult<T> = Result<T, (String, Error)>;

fn plain<T>(r: Result<T, Error>) -> CliResult<T> {
    r.map_err(|e| (String::new(), e))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| (format!("{}: ", path.display()), e.into()))
}

struct Loaded {
    doc: Option<RoboticsModel>,
    robot_text: String,
    geometry_text: Option<String>,
}

fn load(args: &ModelArgs) -> CliResult<Loaded> {
    let (doc, robot_text) = match &args.model {
        Some(p) => {
            let text = read(p)?;
            let doc = parse_robotics(&text).map_err(|e| (format!("{}: ", p.display()), e.into()))?;
            doc.build().map_err(|e| (format!("{}: ", p.display()), e.into()))?;
            (Some(doc), text)
        }
        None => (None, ROADHEADER_ROBOT.to_string()),
    };
    let geometry_text = match &args.geometry {
        Some(p) => {
            let text = read(p)?;
            let g = parse_3dt(&text).map_err(|e| (format!("{}: ", p.display()), e.into()))?;
            let checked = match &doc {
                Some(d) => check_geometry(d, &g),
                None => check_geometry(&rhsim::scenarios::sample_roadheader(), &g),
            };
            checked.map_err(|e| (format!("{}: ", p.display()), e.into()))?;
            Some(text)
        }
        None if args.model.is_none() => Some(ROADHEADER_3DT.to_string()),
        None => None,
    };
    Ok(Loaded {
        doc,
        robot_text,
        geometry_text,
    })
}

fn setup(scenario: Scenario, loaded: &Loaded) -> CliResult<ScenarioSetup> {
    if loaded.doc.is_some() && !scenario.uses_robot_file() {
        log::warn!("scenario {scenario} is built in; --model is ignored");
    }
    plain(scenario.setup(loaded.doc.as_ref(), rhsim::dynamics::STANDARD_GRAVITY))
}

fn run(a: RunArgs) -> CliResult<u8> {
    let loaded = load(&a.model)?;
    let setup = setup(a.scenario, &loaded)?;
    let mut spec = ExperimentSpec::new(a.scenario, a.integrator, a.h, a.iters);
    spec.stride = a.stride;
    let initial = match a.perturb {
        Some(scale) => experiment::perturb(&setup.initial, a.seed, scale),
        None => setup.initial.clone(),
    };
    let kind = a.experiment.unwrap_or(if a.scenario == Scenario::ArmRaise {
        ExperimentKind::Position
    } else {
        ExperimentKind::Energy
    });
    let report = plain(match kind {
        ExperimentKind::Energy => experiment::run_energy_experiment(&spec, &setup, &initial),
        ExperimentKind::Position => experiment::run_position_experiment(&spec, &setup, &initial),
    })?;
    match &a.out {
        Some(p) => {
            let f = File::create(p).map_err(|e| (format!("{}: ", p.display()), e.into()))?;
            plain(report.write_csv(BufWriter::new(f)))?;
        }
        None => plain(report.write_csv(io::stdout().lock()))?,
    }
    match &report.blowup {
        Some(e) => {
            eprintln!("integration blew up: {e}");
            Ok(EXIT_BLOWUP)
        }
        None => Ok(0),
    }
}

fn bench(a: BenchArgs) -> CliResult<u8> {
    let loaded = load(&a.model)?;
    let setup = setup(a.scenario, &loaded)?;
    let config = SimConfig {
        dt: a.dt,
        num_substeps: a.substeps,
        gravity: rhsim::dynamics::STANDARD_GRAVITY,
        integrator: a.integrator,
        actuation_gain: setup.gains.clone(),
    };
    let report = plain(experiment::run_bench(&setup, &config, a.frames, a.warmup))?;
    println!("scenario={} dof={} integrator={} {report}", a.scenario, setup.model.dof(), a.integrator);
    Ok(0)
}

fn serve(a: ServeArgs) -> CliResult<u8> {
    let loaded = load(&a.model)?;
    let Some(geometry) = loaded.geometry_text.clone() else {
        return Err((String::new(), Error::Config("serve needs --geometry when --model is given".into())));
    };
    let setup = setup(Scenario::FullRoadheader, &loaded)?;
    let model = Arc::new(setup.model);
    let config = SimConfig {
        dt: 1.0 / a.rate,
        num_substeps: a.substeps,
        gravity: rhsim::dynamics::STANDARD_GRAVITY,
        integrator: a.integrator,
        actuation_gain: sim::default_gains(&model, rhsim::dynamics::STANDARD_GRAVITY),
    };
    let docs = Documents {
        robot: loaded.robot_text,
        geometry,
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| (String::new(), e.into()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(SocketAddr::new(a.bind, a.port))
            .await
            .map_err(|e| (format!("bind {}:{}: ", a.bind, a.port), e.into()))?;
        let handle = plain(service::spawn(model, config, setup.initial, docs, listener, a.rate).await)?;
        println!("listening on http://{} (ws /sim, GET /model, GET /robot)", handle.addr);
        let _ = tokio::signal::ctrl_c().await;
        handle.shutdown().await;
        Ok(0)
    })
}

#[derive(Serialize)]
struct NamedPose {
    name: String,
    #[serde(flatten)]
    pose: Pose,
}

#[derive(Serialize)]
struct FkCase {
    q: Vec<f64>,
    links: Vec<NamedPose>,
    bodies: Vec<NamedPose>,
}

#[derive(Serialize)]
struct FkFixtures {
    robot: String,
    joints: Vec<String>,
    cases: Vec<FkCase>,
}

fn export_fk(a: ExportFkArgs) -> CliResult<u8> {
    let loaded = load(&a.model)?;
    let setup = setup(Scenario::FullRoadheader, &loaded)?;
    let model = &setup.model;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut qs = vec![DVector::zeros(model.dof())];
    for _ in 0..a.samples {
        qs.push(DVector::from_fn(model.dof(), |_, _| rng.gen_range(-1.0..1.0)));
    }
    let cases = qs
        .iter()
        .map(|q| FkCase {
            q: q.as_slice().to_vec(),
            links: sim::forward_kinematics(model, q)
                .into_iter()
                .zip(model.links())
                .map(|(pose, l)| NamedPose {
                    name: l.name.clone(),
                    pose,
                })
                .collect(),
            bodies: sim::body_poses(model, q)
                .into_iter()
                .map(|(name, pose)| NamedPose { name, pose })
                .collect(),
        })
        .collect();
    let fixtures = FkFixtures {
        robot: model.name.clone(),
        joints: model.joint_names().iter().map(|s| s.to_string()).collect(),
        cases,
    };
    let json = serde_json::to_string_pretty(&fixtures).expect("fixtures serialize");
    match &a.out {
        Some(p) => fs::write(p, json).map_err(|e| (format!("{}: ", p.display()), e.into()))?,
        None => writeln!(io::stdout().lock(), "{json}").map_err(|e| (String::new(), e.into()))?,
    }
    Ok(0)
}

fn replay(a: ReplayArgs) -> CliResult<u8> {
    let loaded = load(&a.model)?;
    let setup = setup(Scenario::FullRoadheader, &loaded)?;
    let text = read(&a.log)?;
    let log = ActionLog::parse(&text).map_err(|e| (format!("{}: ", a.log.display()), e.into()))?;
    plain(log.validate(&setup.model))?;
    let mut config = SimConfig::new(setup.model.dof());
    config.integrator = a.integrator;
    config.actuation_gain = sim::default_gains(&setup.model, config.gravity);
    let mut out = io::stdout().lock();
    match sim::replay(&setup.model, &config, &setup.initial, &log, a.frames) {
        Ok(snaps) => {
            for s in snaps {
                let line = serde_json::to_string(&s).expect("snapshots serialize");
                writeln!(out, "{line}").map_err(|e| (String::new(), e.into()))?;
            }
            Ok(0)
        }
        Err(e) => {
            let line = serde_json::to_string(&e.snapshot).expect("snapshots serialize");
            let _ = writeln!(out, "{line}");
            Err((String::new(), e.into()))
        }
    }
}

//! `zzsched`: topology generation, crosstalk suppression, scheduling, pulse
//! design and simulation from the command line.

mod pulses;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use zzsched::circuit::benchmarks::{benchmark, Benchmark};
use zzsched::circuit::Circuit;
use zzsched::pulse::{Backend, DriveNoise, NativeGate, OptimizeConfig};
use zzsched::scheduler::{schedule_with_policy, Policy, Requirement, SchedulePlan, SchedulerConfig};
use zzsched::sim::{
    drive_noise_eval, loglog_slope, ramsey_effective_zz, sample_device, simulate_samples, DeviceInstance,
    RamseyConfig, RamseyPolicy, RamseyResult, Scenario, SimOptions, SimReport,
};
use zzsched::suppression::{alpha_optimal, brute_force_optimal, SearchStats};
use zzsched::topology::{grid_topology, line_topology, snake_layout, vigo_topology, TopologyGraph};

use pulses::{pulse_set, read_pulse_dir, to_json, write_text, PulseRequest};

#[derive(Parser)]
#[command(name = "zzsched", version, about = "ZZ-crosstalk-aware scheduling and pulse design")]
struct Cli {
    /// Seed for benchmark generation, optimizer restarts and coupling samples.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; all cores when unset.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress; repeat for debug output.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a device topology file.
    Topology(TopologyArgs),
    /// Find a suppression cut for a set of gate qubits.
    Suppress(SuppressArgs),
    /// Write a benchmark circuit.
    Bench(BenchArgs),
    /// Schedule a circuit on a device.
    Schedule(ScheduleArgs),
    /// Design a pulse for one native gate.
    OptimizePulse(OptimizePulseArgs),
    /// Simulate a schedule over sampled coupling strengths.
    Simulate(SimulateArgs),
    /// Measure the effective ZZ strength with a Ramsey experiment.
    Ramsey(RamseyArgs),
    /// Infidelity of one pulse against the coupling strength, as CSV.
    Sweep(SweepArgs),
    /// Schedule, design pulses and simulate under several policies and backends.
    Report(report::ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TopologyKind {
    Grid,
    Line,
    Vigo,
}

#[derive(Args)]
struct TopologyArgs {
    #[arg(value_enum)]
    kind: TopologyKind,
    #[arg(long, default_value_t = 3)]
    rows: usize,
    #[arg(long, default_value_t = 3)]
    cols: usize,
    /// Qubits of a line.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 200e3)]
    lambda_hz: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuppressArgs {
    #[arg(long)]
    topology: PathBuf,
    /// Qubits that must be pulsed, comma separated.
    #[arg(long, value_delimiter = ',')]
    qubits: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Enumerate every cut instead of searching.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SuppressOutput {
    config: SuppressConfig,
    partition_s: Vec<usize>,
    partition_t: Vec<usize>,
    n_q: usize,
    n_c: usize,
    objective: f64,
    pairing_edges: Vec<usize>,
    stats: SearchStats,
}

#[derive(Serialize)]
struct SuppressConfig {
    topology: PathBuf,
    qubits: Vec<usize>,
    alpha: f64,
    k: usize,
    exhaustive: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    name: Benchmark,
    #[arg(long)]
    n: usize,
    /// Lower to native gates.
    #[arg(long)]
    native: bool,
    /// Lay the circuit onto a `ROWSxCOLS` grid along a snake path.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SchedulerFlags {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Layers need `n_q` below this; the maximum degree when unset.
    #[arg(long)]
    nq_max: Option<usize>,
    /// Layers need `n_c` at most this; half the couplings when unset.
    #[arg(long)]
    nc_max: Option<usize>,
}

impl SchedulerFlags {
    fn config(&self, g: &TopologyGraph, backend: Backend) -> Result<SchedulerConfig> {
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.k == 0 {
            bail!("alpha and k must be positive");
        }
        let default = Requirement::for_topology(g);
        Ok(SchedulerConfig {
            alpha: self.alpha,
            k: self.k,
            requirement: Requirement {
                max_n_q: self.nq_max.unwrap_or(default.max_n_q),
                max_n_c: self.nc_max.unwrap_or(default.max_n_c),
            },
            durations: backend.durations(),
        })
    }
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, default_value = "zzx")]
    policy: Policy,
    /// Backend whose gate durations are used.
    #[arg(long, default_value = "gaussian")]
    backend: Backend,
    #[command(flatten)]
    flags: SchedulerFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A schedule with the settings that produced it.
#[derive(Serialize, Deserialize)]
struct PlanFile {
    config: PlanConfig,
    #[serde(flatten)]
    plan: SchedulePlan,
}

#[derive(Serialize, Deserialize)]
struct PlanConfig {
    topology: PathBuf,
    circuit: PathBuf,
    backend: Backend,
    scheduler: SchedulerConfig,
}

#[derive(Args)]
struct PulseFlags {
    /// Idle neighbours per gate qubit in the optimized region.
    #[arg(long, default_value_t = 1)]
    neighbors: usize,
    /// Coupling strength the pulses are designed at, Hz.
    #[arg(long, default_value_t = 200e3)]
    pulse_lambda_hz: f64,
    #[arg(long)]
    duration_ns: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 5)]
    terms: usize,
    #[arg(long, default_value_t = 400)]
    max_iters: usize,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    /// Weight of the gate-implementation term.
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// Directory of cached optimized pulses.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl PulseFlags {
    fn request(&self, backend: Backend, seed: u64) -> PulseRequest {
        PulseRequest {
            backend,
            neighbors: self.neighbors,
            lambda_hz: self.pulse_lambda_hz,
            optimizer: OptimizeConfig {
                duration: self.duration_ns.map(|t| t * 1e-9),
                steps: self.steps,
                terms: self.terms,
                w: self.w,
                max_iters: self.max_iters,
                restarts: self.restarts,
                seed,
                ..OptimizeConfig::default()
            },
        }
    }
}

#[derive(Args)]
struct OptimizePulseArgs {
    #[arg(long)]
    gate: NativeGate,
    #[arg(long, default_value = "pert")]
    backend: Backend,
    /// Coupling strength of the region, Hz.
    #[arg(long, default_value_t = 200e3)]
    lambda_hz: f64,
    #[command(flatten)]
    pulse: PulseFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value = "gaussian")]
    backend: Backend,
    /// Directory holding `rx90.json`, `id.json` and `rzx90.json`; overrides `--backend`.
    #[arg(long)]
    pulses: Option<PathBuf>,
    #[command(flatten)]
    pulse: PulseFlags,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Mean coupling strength, Hz.
    #[arg(long, default_value_t = 200e3)]
    mu_hz: f64,
    #[arg(long, default_value_t = 50e3)]
    sigma_hz: f64,
    /// Use the strengths stored in the topology file instead of sampling.
    #[arg(long)]
    fixed: bool,
    /// Multiply full layer unitaries (up to four qubits).
    #[arg(long)]
    dense: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SimulateOutput {
    config: SimulateConfig,
    mean_fidelity: f64,
    reports: Vec<SimReport>,
}

#[derive(Serialize)]
struct SimulateConfig {
    topology: PathBuf,
    plan: PathBuf,
    pulses: PulseSource,
    samples: usize,
    mu_hz: f64,
    sigma_hz: f64,
    fixed: bool,
    seed: u64,
    dense: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum PulseSource {
    Directory(PathBuf),
    Generated(PulseRequest),
}

#[derive(Args)]
struct RamseyArgs {
    /// Chain length, 2 or 3.
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    #[arg(long, default_value_t = 200e3)]
    lambda_hz: f64,
    #[arg(long, default_value = "bare")]
    policy: RamseyPolicy,
    #[arg(long, default_value = "gaussian")]
    backend: Backend,
    #[command(flatten)]
    pulse: PulseFlags,
    /// Delay points, spaced by `--delay-step-ns`.
    #[arg(long, default_value_t = 64)]
    points: usize,
    #[arg(long, default_value_t = 160.0)]
    delay_step_ns: f64,
    #[arg(long, default_value_t = 2e6)]
    detuning_hz: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RamseyOutput {
    config: RamseyRunConfig,
    #[serde(flatten)]
    result: RamseyResult,
}

#[derive(Serialize)]
struct RamseyRunConfig {
    qubits: usize,
    lambda_hz: f64,
    pulses: PulseRequest,
    ramsey: RamseyConfig,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "rx90")]
    gate: NativeGate,
    #[arg(long, default_value = "gaussian")]
    backend: Backend,
    #[command(flatten)]
    pulse: PulseFlags,
    /// Coupling strengths, Hz, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10e3,20e3,50e3,100e3,200e3,500e3")]
    lambdas_hz: Vec<f64>,
    /// Carrier detuning of the drive, Hz.
    #[arg(long, default_value_t = 0.0)]
    detuning_hz: f64,
    /// Relative amplitude error, e.g. 0.001 for 0.1%.
    #[arg(long, default_value_t = 0.0)]
    amplitude_error: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub(crate) fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected ROWSxCOLS, got '{s}'"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad grid size '{s}': {e}"));
    Ok((parse(r)?, parse(c)?))
}

/// Writes `text` to `out`, or to stdout when unset.
pub(crate) fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub(crate) fn load_topology(path: &Path) -> Result<TopologyGraph> {
    TopologyGraph::load(path).with_context(|| format!("loading topology {}", path.display()))
}

pub(crate) fn load_circuit(path: &Path) -> Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Circuit::parse(&text).with_context(|| format!("parsing circuit {}", path.display()))
}

fn topology(args: TopologyArgs) -> Result<()> {
    let g = match args.kind {
        TopologyKind::Grid => grid_topology(args.rows, args.cols, args.lambda_hz)?,
        TopologyKind::Line => line_topology(args.n, args.lambda_hz)?,
        TopologyKind::Vigo => vigo_topology(args.lambda_hz)?,
    };
    match &args.out {
        Some(path) => g.save(path).with_context(|| format!("writing {}", path.display())),
        None => emit(None, &to_json(&zzsched::topology::TopologyFile::from_topology(&g))?),
    }
}

fn suppress(args: SuppressArgs) -> Result<()> {
    let g = load_topology(&args.topology)?;
    let r = if args.exhaustive {
        brute_force_optimal(&g, &args.qubits, args.alpha)?
    } else {
        alpha_optimal(&g, &args.qubits, args.alpha, args.k)?
    };
    let out = SuppressOutput {
        partition_s: r.cut.partition_s(),
        partition_t: r.cut.partition_t(),
        n_q: r.n_q,
        n_c: r.n_c,
        objective: r.objective,
        pairing_edges: r.pairing.dual_edges.clone(),
        stats: r.stats,
        config: SuppressConfig {
            topology: args.topology,
            qubits: args.qubits,
            alpha: args.alpha,
            k: args.k,
            exhaustive: args.exhaustive,
        },
    };
    emit(args.out.as_deref(), &to_json(&out)?)
}

fn bench(args: BenchArgs, seed: u64) -> Result<()> {
    let mut c = benchmark(args.name, args.n, seed)?;
    if args.native {
        c = c.to_native()?;
    }
    if let Some((rows, cols)) = args.grid {
        c = c.relabel(&snake_layout(rows, cols), rows * cols)?;
    }
    emit(args.out.as_deref(), &c.to_string())
}

fn schedule(args: ScheduleArgs) -> Result<()> {
    let g = load_topology(&args.topology)?;
    let c = load_circuit(&args.circuit)?.to_native()?;
    let cfg = args.flags.config(&g, args.backend)?;
    let plan = schedule_with_policy(&g, &c, args.policy, &cfg)?;
    let file = PlanFile {
        config: PlanConfig { topology: args.topology, circuit: args.circuit, backend: args.backend, scheduler: cfg },
        plan,
    };
    emit(args.out.as_deref(), &to_json(&file)?)
}

#[derive(Serialize)]
struct PulseOutput<'a> {
    #[serde(flatten)]
    pulse: &'a zzsched::pulse::PulseSpec,
    config: &'a PulseRequest,
}

fn optimize_pulse(args: OptimizePulseArgs, seed: u64) -> Result<()> {
    let mut req = args.pulse.request(args.backend, seed);
    req.lambda_hz = args.lambda_hz;
    if args.backend == Backend::Dcg {
        // Simulation falls back to a Gaussian rzx90; an explicit request does not.
        zzsched::pulse::dcg_sequence(args.gate)?;
    }
    let set = pulse_set(&req, &[args.gate], args.pulse.cache_dir.as_deref())?;
    let pulse = set.get(args.gate)?;
    emit(args.out.as_deref(), &to_json(&PulseOutput { pulse, config: &req })?)
}

fn simulate(args: SimulateArgs, seed: u64) -> Result<()> {
    let g = load_topology(&args.topology)?;
    let text = fs::read_to_string(&args.plan).with_context(|| format!("reading {}", args.plan.display()))?;
    let plan: SchedulePlan = serde_json::from_str::<PlanFile>(&text)
        .map(|f| f.plan)
        .with_context(|| format!("parsing plan {}", args.plan.display()))?;
    let (set, source) = match &args.pulses {
        Some(dir) => (read_pulse_dir(dir, &NativeGate::ALL)?, PulseSource::Directory(dir.clone())),
        None => {
            let req = args.pulse.request(args.backend, seed);
            (pulse_set(&req, &NativeGate::ALL, args.pulse.cache_dir.as_deref())?, PulseSource::Generated(req))
        }
    };
    let opts = SimOptions { dense: args.dense, ..SimOptions::default() };
    let reports = if args.fixed {
        let device = DeviceInstance { seed, ..DeviceInstance::from_topology(&g) };
        vec![zzsched::sim::simulate_plan(&device, &plan, &set, None, opts)?]
    } else {
        // Validate the distribution before fanning out.
        sample_device(&g, args.mu_hz, args.sigma_hz, seed)?;
        simulate_samples(&g, &plan, &set, args.mu_hz, args.sigma_hz, args.samples, seed, opts)?
    };
    let mean_fidelity = reports.iter().map(|r| r.fidelity).sum::<f64>() / reports.len().max(1) as f64;
    let out = SimulateOutput {
        config: SimulateConfig {
            topology: args.topology,
            plan: args.plan,
            pulses: source,
            samples: reports.len(),
            mu_hz: args.mu_hz,
            sigma_hz: args.sigma_hz,
            fixed: args.fixed,
            seed,
            dense: args.dense,
        },
        mean_fidelity,
        reports,
    };
    emit(args.out.as_deref(), &to_json(&out)?)
}

fn ramsey(args: RamseyArgs, seed: u64) -> Result<()> {
    let device = DeviceInstance::uniform(&line_topology(args.qubits, 0.0)?, args.lambda_hz);
    let req = args.pulse.request(args.backend, seed);
    let set = pulse_set(&req, &[NativeGate::Rx90, NativeGate::Id], args.pulse.cache_dir.as_deref())?;
    let cfg = RamseyConfig {
        delays: (0..args.points).map(|k| k as f64 * args.delay_step_ns * 1e-9).collect(),
        detuning_hz: args.detuning_hz,
    };
    let result = ramsey_effective_zz(&device, &set, args.policy, &cfg, SimOptions::default())?;
    log::info!("effective ZZ {:.3} Hz", result.effective_hz);
    let out = RamseyOutput {
        config: RamseyRunConfig { qubits: args.qubits, lambda_hz: args.lambda_hz, pulses: req, ramsey: cfg },
        result,
    };
    emit(args.out.as_deref(), &to_json(&out)?)
}

fn sweep(args: SweepArgs, seed: u64) -> Result<()> {
    let req = args.pulse.request(args.backend, seed);
    let set = pulse_set(&req, &[args.gate], args.pulse.cache_dir.as_deref())?;
    let scenario = if args.gate.num_qubits() == 2 { Scenario::TwoGateChain } else { Scenario::SingleGatePair };
    let noise = DriveNoise { detuning_hz: args.detuning_hz, amplitude_scale: 1.0 + args.amplitude_error };
    let points = drive_noise_eval(scenario, set.get(args.gate)?, noise, &args.lambdas_hz)?;
    if let Ok(slope) = loglog_slope(&points.iter().map(|p| (p.lambda_hz, p.raw)).collect::<Vec<_>>()) {
        log::info!("log-log slope {slope:.3}");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lambda_hz", "infidelity"])?;
    for p in &points {
        w.write_record([p.lambda_hz.to_string(), format!("{:e}", p.infidelity)])?;
    }
    emit(args.out.as_deref(), &String::from_utf8(w.into_inner()?)?)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    match cli.command {
        Command::Topology(a) => topology(a),
        Command::Suppress(a) => suppress(a),
        Command::Bench(a) => bench(a, cli.seed),
        Command::Schedule(a) => schedule(a),
        Command::OptimizePulse(a) => optimize_pulse(a, cli.seed),
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Ramsey(a) => ramsey(a, cli.seed),
        Command::Sweep(a) => sweep(a, cli.seed),
        Command::Report(a) => report::run(a, cli.seed),
    }
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    if let Err(e) = run(cli) {
        // Library errors already quote their source, so skip repeated causes.
        let mut msg = String::new();
        for cause in e.chain().map(|c| c.to_string()) {
            if !msg.contains(&cause) {
                msg = if msg.is_empty() { cause } else { format!("{msg}: {cause}") };
            }
        }
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}

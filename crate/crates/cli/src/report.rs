//! The full pipeline: schedule a circuit under each policy, build pulses for
//! each backend, simulate over sampled devices and summarize.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use zzsched::circuit::benchmarks::{benchmark, Benchmark};
use zzsched::circuit::Circuit;
use zzsched::pulse::{Backend, NativeGate, OptimizeConfig};
use zzsched::scheduler::{schedule_with_policy, Policy, SchedulerConfig};
use zzsched::sim::{simulate_samples, SimOptions, SimReport};
use zzsched::topology::{grid_topology, snake_layout, TopologyGraph};

use crate::pulses::{pulse_set, to_json, write_text};
use crate::{emit, load_circuit, load_topology, parse_grid, PulseFlags, SchedulerFlags};

#[derive(Args)]
pub struct ReportArgs {
    /// Topology file; alternatively `--grid`.
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    topology: Option<PathBuf>,
    /// Generate a `ROWSxCOLS` grid.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Coupling strength of a generated grid, Hz.
    #[arg(long, default_value_t = 200e3)]
    lambda_hz: f64,
    /// Circuit file; alternatively `--bench` and `--n`.
    #[arg(long, conflicts_with = "bench", required_unless_present = "bench")]
    circuit: Option<PathBuf>,
    #[arg(long, requires = "n")]
    bench: Option<Benchmark>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "zzx,par")]
    policies: Vec<Policy>,
    #[arg(long, value_delimiter = ',', default_value = "gaussian,pert")]
    backends: Vec<Backend>,
    #[command(flatten)]
    scheduler: SchedulerFlags,
    #[command(flatten)]
    pulse: PulseFlags,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = 200e3)]
    mu_hz: f64,
    #[arg(long, default_value_t = 50e3)]
    sigma_hz: f64,
    /// Directory for plans, per-run reports and the summary.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunConfig {
    topology: Option<PathBuf>,
    grid: Option<(usize, usize)>,
    lambda_hz: f64,
    circuit: Option<PathBuf>,
    bench: Option<String>,
    n: Option<usize>,
    policies: Vec<Policy>,
    backends: Vec<Backend>,
    /// Scheduler settings; durations are those of the first backend.
    scheduler: SchedulerConfig,
    neighbors: usize,
    pulse_lambda_hz: f64,
    optimizer: OptimizeConfig,
    samples: usize,
    mu_hz: f64,
    sigma_hz: f64,
    seed: u64,
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    policy: Policy,
    backend: Backend,
    mean_fidelity: f64,
    min_fidelity: f64,
    layers: usize,
    duration_ns: f64,
    /// Against the `par` schedule with the same pulses.
    fidelity_vs_par: Option<f64>,
    duration_vs_par: Option<f64>,
    /// Against `par` scheduling with Gaussian pulses.
    fidelity_vs_baseline: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    config: RunConfig,
    rows: Vec<Row>,
}

#[derive(Serialize)]
struct RunReport<'a> {
    policy: Policy,
    backend: Backend,
    mean_fidelity: f64,
    reports: &'a [SimReport],
}

fn device(args: &ReportArgs) -> Result<TopologyGraph> {
    match (&args.topology, args.grid) {
        (Some(path), _) => load_topology(path),
        (None, Some((rows, cols))) => Ok(grid_topology(rows, cols, args.lambda_hz)?),
        (None, None) => bail!("need --topology or --grid"),
    }
}

/// The native circuit on the device's qubits. Generated grids get a snake
/// layout; otherwise logical qubit `q` runs on device qubit `q`.
fn placed_circuit(args: &ReportArgs, g: &TopologyGraph, seed: u64) -> Result<Circuit> {
    let c = match (&args.circuit, args.bench, args.n) {
        (Some(path), _, _) => load_circuit(path)?,
        (None, Some(b), Some(n)) => benchmark(b, n, seed)?,
        _ => bail!("need --circuit or --bench with --n"),
    }
    .to_native()?;
    let n = g.num_vertices();
    let layout = match args.grid {
        Some((rows, cols)) if args.topology.is_none() => snake_layout(rows, cols),
        _ => (0..n).collect(),
    };
    Ok(c.relabel(&layout, n)?)
}

fn table(rows: &[Row]) -> String {
    let ratio = |r: Option<f64>| r.map_or("-".to_string(), |v| format!("{v:.3}"));
    let mut s = format!(
        "{:<6} {:<9} {:>9} {:>9} {:>6} {:>12} {:>9} {:>9} {:>9}\n",
        "policy", "backend", "fidelity", "min", "layers", "duration_ns", "vs_par", "dur_ratio", "vs_base"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<6} {:<9} {:>9.4} {:>9.4} {:>6} {:>12.1} {:>9} {:>9} {:>9}",
            r.policy.to_string(),
            r.backend.to_string(),
            r.mean_fidelity,
            r.min_fidelity,
            r.layers,
            r.duration_ns,
            ratio(r.fidelity_vs_par),
            ratio(r.duration_vs_par),
            ratio(r.fidelity_vs_baseline),
        );
    }
    s
}

pub fn run(args: ReportArgs, seed: u64) -> Result<()> {
    if args.policies.is_empty() || args.backends.is_empty() {
        bail!("need at least one policy and one backend");
    }
    let g = device(&args)?;
    let c = placed_circuit(&args, &g, seed)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let opts = SimOptions::default();
    let mut rows = Vec::new();
    for &backend in &args.backends {
        let req = args.pulse.request(backend, seed);
        let set = pulse_set(&req, &NativeGate::ALL, args.pulse.cache_dir.as_deref())?;
        let cfg = args.scheduler.config(&g, backend)?;
        for &policy in &args.policies {
            let plan = schedule_with_policy(&g, &c, policy, &cfg)?;
            let reports = simulate_samples(&g, &plan, &set, args.mu_hz, args.sigma_hz, args.samples, seed, opts)?;
            let fids: Vec<f64> = reports.iter().map(|r| r.fidelity).collect();
            let mean = fids.iter().sum::<f64>() / fids.len().max(1) as f64;
            if let Some(dir) = &args.out_dir {
                write_text(&dir.join(format!("plan-{policy}-{backend}.json")), &to_json(&plan)?)?;
                let run = RunReport { policy, backend, mean_fidelity: mean, reports: &reports };
                write_text(&dir.join(format!("report-{policy}-{backend}.json")), &to_json(&run)?)?;
            }
            rows.push(Row {
                policy,
                backend,
                mean_fidelity: mean,
                min_fidelity: fids.iter().copied().fold(f64::INFINITY, f64::min).min(1.0),
                layers: plan.depth(),
                duration_ns: plan.total_duration * 1e9,
                fidelity_vs_par: None,
                duration_vs_par: None,
                fidelity_vs_baseline: None,
            });
        }
    }
    let find = |p: Policy, b: Backend, rows: &[Row]| rows.iter().find(|r| r.policy == p && r.backend == b).cloned();
    let baseline = find(Policy::Par, Backend::Gaussian, &rows);
    let snapshot = rows.clone();
    for r in &mut rows {
        if r.policy != Policy::Par {
            if let Some(par) = find(Policy::Par, r.backend, &snapshot) {
                r.fidelity_vs_par = Some(r.mean_fidelity / par.mean_fidelity);
                r.duration_vs_par = (par.duration_ns > 0.0).then(|| r.duration_ns / par.duration_ns);
            }
        }
        if let Some(b) = &baseline {
            r.fidelity_vs_baseline = Some(r.mean_fidelity / b.mean_fidelity);
        }
    }
    print!("{}", table(&rows));

    let scheduler = args.scheduler.config(&g, args.backends[0])?;
    let summary = Summary {
        config: RunConfig {
            topology: args.topology.clone(),
            grid: args.grid,
            lambda_hz: args.lambda_hz,
            circuit: args.circuit.clone(),
            bench: args.bench.map(|b| b.to_string()),
            n: args.n,
            policies: args.policies.clone(),
            backends: args.backends.clone(),
            scheduler,
            neighbors: args.pulse.neighbors,
            pulse_lambda_hz: args.pulse.pulse_lambda_hz,
            optimizer: args.pulse.request(args.backends[0], seed).optimizer,
            samples: args.samples,
            mu_hz: args.mu_hz,
            sigma_hz: args.sigma_hz,
            seed,
            out_dir: args.out_dir.clone(),
        },
        rows,
    };
    let text = to_json(&summary)?;
    match &args.out_dir {
        Some(dir) => write_text(&dir.join("summary.json"), &text),
        None => emit(None, &text),
    }
}

//! End-to-end acceptance checks, one line per criterion.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zzsched::circuit::benchmarks::{benchmark, Benchmark};
use zzsched::circuit::{Circuit, Gate};
use zzsched::pulse::{
    self, baseline_pulse, dcg_sequence, CouplingForm, DriveNoise, GeneralRegion, NativeGate, PlacedPulse, PulseSpec,
    RegionModel,
};
use zzsched::quantum::frobenius;
use zzsched::scheduler::{gate_distance, par_sched, schedule, separate_two_qubit_gates, SchedulePlan, SchedulerConfig};
use zzsched::sim::{
    loglog_slope, ramsey_effective_zz, simulate_samples, DeviceInstance, PulseSet, RamseyConfig, RamseyPolicy,
    SimOptions,
};
use zzsched::suppression::{alpha_optimal, brute_force_optimal};
use zzsched::topology::*;

type Outcome = Result<String, String>;

type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Pulses from the cancellation backend, shared by several criteria.
fn pert_pulses() -> &'static PulseSet {
    static PULSES: OnceLock<PulseSet> = OnceLock::new();
    PULSES.get_or_init(|| {
        PulseSet::optimized(pulse::Backend::Pert, 1, hz(200e3), &pulse::OptimizeConfig::default())
            .expect("pulse optimization")
    })
}

fn duality() -> Outcome {
    let start = Instant::now();
    let mut failures = 0;
    let mut pairings = 0;
    for g in [grid_topology(2, 3, 0.0).unwrap(), grid_topology(3, 3, 0.0).unwrap()] {
        let d = dual_graph(&g).unwrap();
        let n = g.num_vertices();
        let m = g.num_edges();
        for mask in 0u32..1 << n {
            let cut = Cut::from_sides((0..n).map(|v| mask >> v & 1 == 1).collect());
            let r = remaining_set(&g, &cut).unwrap();
            failures += usize::from(!is_odd_vertex_pairing(&d, &r));
        }
        for emask in 0u32..1 << m {
            let set: Vec<usize> = (0..m).filter(|&e| emask >> e & 1 == 1).collect();
            if !is_odd_vertex_pairing(&d, &set) {
                continue;
            }
            pairings += 1;
            match cut_from_pairing(&g, &OddVertexPairing::new(set.clone())) {
                Ok(cut) => {
                    let r = remaining_set(&g, &cut).unwrap();
                    failures += usize::from(!r.iter().all(|e| set.contains(e)));
                }
                Err(_) => failures += 1,
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(failures == 0 && secs < 5.0, format!("{failures} failures over {pairings} pairings in {secs:.2} s"))
}

fn bipartite_suppression() -> Outcome {
    let mut graphs: Vec<(String, TopologyGraph)> = Vec::new();
    for rows in 2..=4 {
        for cols in 2..=4 {
            graphs.push((format!("{rows}x{cols}"), grid_topology(rows, cols, 0.0).unwrap()));
        }
    }
    graphs.push(("vigo".into(), vigo_topology(0.0).unwrap()));
    let mut failures = Vec::new();
    for (name, g) in &graphs {
        for alpha in [0.1, 0.5, 2.0] {
            let r = alpha_optimal(g, &[], alpha, 3).unwrap();
            if (r.n_q, r.n_c) != (1, 0) {
                failures.push(format!("{name} α={alpha}: ({}, {})", r.n_q, r.n_c));
            }
        }
    }
    check(failures.is_empty(), format!("{} topologies x 3 weights, failures: {failures:?}", graphs.len()))
}

fn oracle_parity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 1.0;
    let mut mismatches = Vec::new();
    for g in [grid_topology(3, 3, 0.0).unwrap(), grid_topology(3, 4, 0.0).unwrap()] {
        let n = g.num_vertices();
        let empty_a = alpha_optimal(&g, &[], 0.5, 3).unwrap();
        let empty_b = brute_force_optimal(&g, &[], 0.5).unwrap();
        if (empty_a.objective - empty_b.objective).abs() > 1e-12 {
            mismatches.push(format!("{n} qubits, q = ∅"));
        }
        for _ in 0..20 {
            let size = rng.random_range(1..=4);
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            let q = &all[..size];
            let a = alpha_optimal(&g, q, 0.5, 3).unwrap();
            let b = brute_force_optimal(&g, q, 0.5).unwrap();
            worst = worst.max(a.objective / b.objective);
            if a.objective > 1.25 * b.objective + 1e-12 {
                mismatches.push(format!("{n} qubits, q = {q:?}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        mismatches.is_empty() && secs < 10.0,
        format!("worst ratio {worst:.3}, violations {mismatches:?}, {secs:.2} s"),
    )
}

fn constrained_behaviour() -> Outcome {
    let g = common::defect_grid(0.0);
    let q = [1, 3, 5];
    let r = alpha_optimal(&g, &q, 0.5, 3).unwrap();
    let together = r.cut.keeps_together(&q);
    check(
        r.stats.passed_check >= 1 && together,
        format!("{} candidates accepted, q on one side: {together}", r.stats.passed_check),
    )
}

fn random_gate_set(g: &TopologyGraph, rng: &mut ChaCha8Rng, count: usize) -> Vec<Gate> {
    let mut edges: Vec<usize> = (0..g.num_edges()).collect();
    edges.shuffle(rng);
    let mut used = vec![false; g.num_vertices()];
    let mut gates = Vec::new();
    for e in edges {
        let (u, v) = g.edge(e);
        if used[u] || used[v] {
            continue;
        }
        used[u] = true;
        used[v] = true;
        gates.push(Gate::rzx90(u, v));
        if gates.len() == count {
            break;
        }
    }
    gates
}

fn top_k_separation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    let mut split = 0;
    for trial in 0..200 {
        let g = if trial % 2 == 0 { grid_topology(3, 4, 2e5) } else { grid_topology(4, 4, 2e5) }.unwrap();
        let count = rng.random_range(2..=6);
        let gates = random_gate_set(&g, &mut rng, count);
        let rounds = separate_two_qubit_gates(&g, &gates, &SchedulerConfig::for_topology(&g)).unwrap();
        if rounds.len() < 2 {
            continue;
        }
        split += 1;
        let mut layer = vec![usize::MAX; gates.len()];
        for (l, r) in rounds.iter().enumerate() {
            for &i in &r.chosen {
                layer[i] = l;
            }
        }
        // The seeds of every split round, the closest remaining pair, land apart.
        for r in &rounds {
            if let Some((a, b)) = r.seeds {
                violations += usize::from(layer[a] == layer[b]);
            }
        }
        let d = |a: usize, b: usize| gate_distance(&g, &gates[a], &gates[b]).unwrap();
        let closest = (0..gates.len()).flat_map(|a| (a + 1..gates.len()).map(move |b| d(a, b))).min().unwrap();
        let (a, b) = rounds[0].seeds.unwrap();
        violations += usize::from(d(a, b) != closest || layer[a] == layer[b]);
    }
    check(violations == 0, format!("{violations} violations over {split} multi-layer sets"))
}

fn sweep(model: &RegionModel, p: &PulseSpec, lambdas_hz: &[f64]) -> Vec<(f64, f64)> {
    let target = p.target_gate.unwrap().target();
    lambdas_hz
        .iter()
        .map(|&f| {
            let m = model.with_uniform_lambda(hz(f));
            (f, pulse::region_infidelity(&m, p, &target, DriveNoise::default()).unwrap())
        })
        .collect()
}

fn first_order_cancellation() -> Outcome {
    let lambdas = [10e3, 20e3, 50e3, 100e3, 200e3];
    let mut ok = true;
    let mut parts = Vec::new();
    for gate in [NativeGate::Rx90, NativeGate::Id] {
        for m in [1, 2] {
            let model = RegionModel::for_gate(gate, m, hz(200e3));
            let p = &pulse::optimize(&model, gate, pulse::Backend::Pert, &pulse::OptimizeConfig::default()).unwrap();
            let idle = PulseSpec { channels: vec![], ..p.clone() };
            let ratio = frobenius(&pulse::pert_first_order(&model, p).unwrap())
                / frobenius(&pulse::pert_first_order(&model, &idle).unwrap());
            let slope = loglog_slope(&sweep(&model, p, &lambdas)).unwrap();
            let base = loglog_slope(&sweep(&model, &baseline_pulse(gate), &lambdas)).unwrap();
            ok &= ratio <= 1e-3 && slope >= 3.5 && (base - 2.0).abs() <= 0.3;
            parts.push(format!("{gate}/{m}: ratio {ratio:.1e} slope {slope:.2} (gaussian {base:.2})"));
        }
    }
    check(ok, parts.join("; "))
}

fn composite_gate() -> Outcome {
    let dcg = dcg_sequence(NativeGate::Rx90).unwrap();
    let target = NativeGate::Rx90.target();
    let clean = pulse::infidelity(&target, &pulse::control_unitary(&dcg, 1, CouplingForm::Zx));
    let model = RegionModel::single(&[hz(200e3)]);
    let with_dcg = pulse::region_infidelity(&model, &dcg, &target, DriveNoise::default()).unwrap();
    let with_gauss =
        pulse::region_infidelity(&model, &baseline_pulse(NativeGate::Rx90), &target, DriveNoise::default()).unwrap();
    check(
        dcg.t_ns == 120.0 && clean <= 1e-6 && with_dcg < with_gauss,
        format!("λ=0: {clean:.1e}; 200 kHz: dcg {with_dcg:.2e} vs gaussian {with_gauss:.2e}"),
    )
}

/// Two-qubit gate on a, b (0, 1) and a single-qubit gate on c (2). Neighbours
/// 1, 2 touch a; 3 touches b; 4 touches c; 5 touches b and c. Inside the
/// region a couples to b and to c.
fn general_region_infidelity(set: &PulseSet, lambda: f64) -> f64 {
    let region = GeneralRegion {
        gate_qubits: 3,
        neighbors: vec![vec![(0, lambda)], vec![(0, lambda)], vec![(1, lambda)], vec![(2, lambda)], vec![(1, lambda), (2, lambda)]],
        intra: vec![(0, 1, lambda), (0, 2, lambda)],
        coupling: CouplingForm::Zx,
    };
    let zx = set.get(NativeGate::Rzx90).unwrap();
    let rx = set.get(NativeGate::Rx90).unwrap();
    let id = set.get(NativeGate::Id).unwrap();
    let mut placed = vec![
        PlacedPulse { pulse: zx.clone(), qubits: vec![0, 1], start: 0 },
        PlacedPulse { pulse: rx.clone(), qubits: vec![2], start: 0 },
    ];
    let mut start = rx.steps;
    while start + id.steps <= zx.steps {
        placed.push(PlacedPulse { pulse: id.clone(), qubits: vec![2], start });
        start += id.steps;
    }
    region.cross_region_infidelity(&placed, zx.steps).unwrap()
}

fn general_region() -> Outcome {
    let pert = general_region_infidelity(pert_pulses(), hz(200e3));
    let gauss = general_region_infidelity(&PulseSet::gaussian(), hz(200e3));
    check(gauss >= 10.0 * pert, format!("optimized {pert:.2e} vs gaussian {gauss:.2e} ({:.0}x)", gauss / pert))
}

fn on_device(b: Benchmark, n: usize, rows: usize, cols: usize) -> (TopologyGraph, Circuit) {
    let g = grid_topology(rows, cols, 200e3).unwrap();
    let c = benchmark(b, n, 0).unwrap().to_native().unwrap().relabel(&snake_layout(rows, cols), rows * cols).unwrap();
    (g, c)
}

fn mean_fidelity(g: &TopologyGraph, plan: &SchedulePlan, set: &PulseSet) -> f64 {
    let reports = simulate_samples(g, plan, set, 200e3, 50e3, 10, 0, SimOptions::default()).unwrap();
    reports.iter().map(|r| r.fidelity).sum::<f64>() / reports.len() as f64
}

fn co_optimization() -> Outcome {
    let start = Instant::now();
    let gauss = PulseSet::gaussian();
    let mut ok = true;
    let mut parts = Vec::new();
    for (b, n, rows, cols) in [(Benchmark::Qft, 4, 2, 3), (Benchmark::Ising, 6, 3, 3)] {
        let (g, c) = on_device(b, n, rows, cols);
        let cfg = SchedulerConfig::for_topology(&g);
        let zzx = schedule(&g, &c, &cfg).unwrap();
        let par = par_sched(&g, &c, cfg.durations).unwrap();
        let both = mean_fidelity(&g, &zzx, pert_pulses());
        let pulses_only = mean_fidelity(&g, &par, pert_pulses());
        let sched_only = mean_fidelity(&g, &zzx, &gauss);
        let neither = mean_fidelity(&g, &par, &gauss);
        ok &= both >= 2.0 * neither && both > pulses_only && both > sched_only;
        parts.push(format!(
            "{b}-{n}: {both:.3} vs {neither:.3} ({:.1}x), pulse-only {pulses_only:.3}, schedule-only {sched_only:.3}",
            both / neither
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    parts.push(format!("{secs:.0} s"));
    check(ok, parts.join("; "))
}

fn ramsey() -> Outcome {
    let lambda_hz = 200e3;
    let cfg = RamseyConfig::default();
    // The probe precesses at 2λ z / 2π Hz for spectator eigenvalue z = ±1.
    let analytic = 4.0 * lambda_hz;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let device = DeviceInstance::uniform(&line_topology(n, 0.0).unwrap(), lambda_hz);
        let run = |policy| ramsey_effective_zz(&device, pert_pulses(), policy, &cfg, SimOptions::default()).unwrap();
        let bare = run(RamseyPolicy::Bare);
        let err = (bare.effective_hz - analytic).abs() / analytic;
        ok &= err <= 0.05;
        parts.push(format!("{n} qubits: bare {:.1} kHz vs {:.1} kHz", bare.effective_hz / 1e3, analytic / 1e3));
        for policy in [RamseyPolicy::SuppressedB, RamseyPolicy::SuppressedC] {
            let s = run(policy);
            let reduction = bare.effective_hz / s.effective_hz.max(1e-9);
            ok &= reduction >= 10.0;
            parts.push(format!("{policy:?} {:.1} Hz ({reduction:.0}x)", s.effective_hz));
        }
    }
    check(ok, parts.join("; "))
}

fn parallelism_cost() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (n, rows, cols) in [(4, 2, 2), (6, 2, 3)] {
        for b in Benchmark::ALL {
            let (g, c) = on_device(b, n, rows, cols);
            let cfg = SchedulerConfig::for_topology(&g);
            let ratio = schedule(&g, &c, &cfg).unwrap().total_duration / par_sched(&g, &c, cfg.durations).unwrap().total_duration;
            worst = worst.max(ratio);
            parts.push(format!("{b}-{n} {ratio:.2}"));
        }
    }
    check(worst <= 3.0, format!("worst {worst:.2}: {}", parts.join(", ")))
}

fn compile_speed() -> Outcome {
    let mut slowest: f64 = 0.0;
    for b in Benchmark::ALL {
        let (g, c) = on_device(b, 6, 3, 3);
        let start = Instant::now();
        schedule(&g, &c, &SchedulerConfig::for_topology(&g)).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
    }
    check(slowest < 1.0, format!("slowest {:.1} ms", slowest * 1e3))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("duality", duality),
        ("complete suppression on bipartite topologies", bipartite_suppression),
        ("oracle parity", oracle_parity),
        ("constrained behaviour", constrained_behaviour),
        ("top-K separation", top_k_separation),
        ("first-order cancellation", first_order_cancellation),
        ("composite gate", composite_gate),
        ("general-region composition", general_region),
        ("end-to-end co-optimization", co_optimization),
        ("Ramsey effective ZZ", ramsey),
        ("parallelism cost", parallelism_cost),
        ("compile speed", compile_speed),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Whole-device simulation of scheduled circuits under always-on ZZ coupling.
//!
//! Every layer is evolved under
//! `H(t) = Σ_gates H_ctrl(t) + Σ_edges λ_e σ_z σ_z` with piecewise-constant
//! steps on the pulses' own grid. Shorter gates in a layer are followed by
//! identity pulses; virtual `rz` gates are applied as exact frame rotations.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Durations, Gate};
use crate::error::{Error, Result};
use crate::pulse::{
    self, baseline_pulse, dcg_sequence, optimize, Axis, Backend, CouplingForm, DriveNoise, NativeGate, OptimizeConfig,
    PulseSpec, RegionModel,
};
use crate::quantum::{self, CMatrix, CVector, C64};
use crate::scheduler::{Policy, SchedulePlan};
use crate::topology::TopologyGraph;

pub mod ramsey;

pub use ramsey::{fit_cosine, ramsey_effective_zz, CosineFit, RamseyConfig, RamseyPolicy, RamseyResult};

/// Largest device simulated.
pub const MAX_QUBITS: usize = 12;

/// Largest device accepted by the dense-unitary path.
pub const MAX_DENSE_QUBITS: usize = 4;

/// Reported infidelities are floored here.
pub const INFIDELITY_FLOOR: f64 = 1e-8;

/// A device with one sampled ZZ strength per coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceInstance {
    pub topology: TopologyGraph,
    /// Per-edge `λ`, rad/s.
    pub lambdas: Vec<f64>,
    pub seed: u64,
}

impl DeviceInstance {
    /// Uses the strengths stored on the topology.
    pub fn from_topology(topology: &TopologyGraph) -> Self {
        DeviceInstance { lambdas: topology.lambdas().to_vec(), topology: topology.clone(), seed: 0 }
    }

    /// Every coupling at `lambda_hz`.
    pub fn uniform(topology: &TopologyGraph, lambda_hz: f64) -> Self {
        DeviceInstance {
            lambdas: vec![2.0 * PI * lambda_hz; topology.num_edges()],
            topology: topology.clone(),
            seed: 0,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.topology.num_vertices()
    }

    pub fn lambdas_hz(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l / (2.0 * PI)).collect()
    }

    /// `Σ_e λ_e z_u z_v` for every basis state.
    fn zz_diagonal(&self) -> Vec<f64> {
        let n = self.num_qubits();
        (0..1usize << n)
            .map(|i| {
                self.topology
                    .edges()
                    .iter()
                    .zip(&self.lambdas)
                    .map(|(&(u, v), &l)| l * z_sign(i, u, n) * z_sign(i, v, n))
                    .sum()
            })
            .collect()
    }
}

fn z_sign(index: usize, q: usize, n: usize) -> f64 {
    if (index >> (n - 1 - q)) & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Draws every coupling from `N(mu, sigma²)` (Hz), redrawing negative values.
pub fn sample_device(topology: &TopologyGraph, mu_hz: f64, sigma_hz: f64, seed: u64) -> Result<DeviceInstance> {
    if sigma_hz.is_nan() || sigma_hz < 0.0 || !mu_hz.is_finite() {
        return Err(Error::Sim(format!("invalid coupling distribution N({mu_hz}, {sigma_hz}²)")));
    }
    if mu_hz < 0.0 && sigma_hz == 0.0 {
        return Err(Error::Sim("negative coupling strength".into()));
    }
    let normal = Normal::new(mu_hz, sigma_hz).map_err(|e| Error::Sim(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambdas = (0..topology.num_edges())
        .map(|_| loop {
            let x = normal.sample(&mut rng);
            if x >= 0.0 {
                break 2.0 * PI * x;
            }
        })
        .collect();
    Ok(DeviceInstance { topology: topology.clone(), lambdas, seed })
}

/// Pulses for every native gate, all from one backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSet {
    pub backend: Backend,
    pub pulses: BTreeMap<NativeGate, PulseSpec>,
}

impl PulseSet {
    pub fn gaussian() -> Self {
        PulseSet {
            backend: Backend::Gaussian,
            pulses: NativeGate::ALL.into_iter().map(|g| (g, baseline_pulse(g))).collect(),
        }
    }

    /// Composite single-qubit gates; the two-qubit gate keeps its Gaussian pulse.
    pub fn dcg() -> Self {
        let mut pulses = BTreeMap::new();
        for g in NativeGate::ALL {
            pulses.insert(g, dcg_sequence(g).unwrap_or_else(|_| baseline_pulse(g)));
        }
        PulseSet { backend: Backend::Dcg, pulses }
    }

    /// Optimizes every gate on a basic region with `neighbors` idle neighbours
    /// per gate qubit at `lambda` rad/s.
    pub fn optimized(backend: Backend, neighbors: usize, lambda: f64, cfg: &OptimizeConfig) -> Result<Self> {
        match backend {
            Backend::Gaussian => return Ok(PulseSet::gaussian()),
            Backend::Dcg => return Ok(PulseSet::dcg()),
            _ => {}
        }
        let pulses = NativeGate::ALL
            .into_par_iter()
            .map(|g| optimize(&RegionModel::for_gate(g, neighbors, lambda), g, backend, cfg).map(|p| (g, p)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(PulseSet { backend, pulses })
    }

    pub fn get(&self, gate: NativeGate) -> Result<&PulseSpec> {
        self.pulses.get(&gate).ok_or_else(|| Error::Sim(format!("no pulse for {gate}")))
    }

    /// Gate durations implied by the pulses, for scheduling.
    pub fn durations(&self) -> Durations {
        let d = |g| self.pulses.get(&g).map(PulseSpec::duration);
        let base = self.backend.durations();
        Durations {
            rx90: d(NativeGate::Rx90).unwrap_or(base.rx90),
            identity: d(NativeGate::Id).unwrap_or(base.identity),
            rzx90: d(NativeGate::Rzx90).unwrap_or(base.rzx90),
        }
    }

    fn tables(&self) -> Result<BTreeMap<NativeGate, PulseTable>> {
        let mut out = BTreeMap::new();
        let mut dt: Option<f64> = None;
        for (&g, p) in &self.pulses {
            p.validate()?;
            let step = p.dt();
            if let Some(d) = dt {
                if ((step - d) / d).abs() > 1e-9 {
                    return Err(Error::Sim("pulses use different time steps".into()));
                }
            }
            dt = Some(step);
            out.insert(g, PulseTable::new(p));
        }
        Ok(out)
    }
}

/// Channel amplitudes of a pulse sampled on its step midpoints.
#[derive(Debug, Clone)]
struct PulseTable {
    channels: Vec<(Axis, Vec<usize>)>,
    samples: Vec<Vec<f64>>,
    dt: f64,
}

impl PulseTable {
    fn new(p: &PulseSpec) -> Self {
        PulseTable {
            channels: p.channels.iter().map(|c| (c.axis, c.target.clone())).collect(),
            samples: (0..p.steps).map(|k| p.sample(k)).collect(),
            dt: p.dt(),
        }
    }

    fn steps(&self) -> usize {
        self.samples.len()
    }
}

/// A single control term on device qubits.
#[derive(Debug, Clone, Copy)]
enum Term {
    X(usize),
    Y(usize),
    Zx(usize, usize),
    XxYy(usize, usize),
}

#[derive(Debug, Clone)]
struct Drive<'a> {
    table: &'a PulseTable,
    qubits: Vec<usize>,
    start: usize,
}

/// A layer ready for evolution.
#[derive(Debug, Clone)]
struct TimedLayer<'a> {
    frame: Vec<Gate>,
    ideal: Vec<Gate>,
    drives: Vec<Drive<'a>>,
    steps: usize,
}

impl TimedLayer<'_> {
    fn terms_at(&self, k: usize, coupling: CouplingForm) -> Vec<(Term, f64)> {
        let mut out = Vec::new();
        for d in &self.drives {
            if k < d.start || k >= d.start + d.table.steps() {
                continue;
            }
            let amps = &d.table.samples[k - d.start];
            for ((axis, target), &a) in d.table.channels.iter().zip(amps) {
                if a == 0.0 {
                    continue;
                }
                let q = |i: usize| d.qubits[target[i]];
                let term = match axis {
                    Axis::X => Term::X(q(0)),
                    Axis::Y => Term::Y(q(0)),
                    Axis::Coupling => match coupling {
                        CouplingForm::Zx => Term::Zx(q(0), q(1)),
                        CouplingForm::XxYy => Term::XxYy(q(0), q(1)),
                    },
                };
                out.push((term, a));
            }
        }
        out
    }
}

fn timed_layer<'a>(
    frame: Vec<Gate>,
    gates: &[Gate],
    tables: &'a BTreeMap<NativeGate, PulseTable>,
) -> Result<TimedLayer<'a>> {
    let table = |g: NativeGate| tables.get(&g).ok_or_else(|| Error::Sim(format!("no pulse for {g}")));
    let mut natives = Vec::new();
    for g in gates {
        let kind = NativeGate::of(g)
            .ok_or_else(|| Error::Sim(format!("gate '{}' has no pulse; lower the circuit to native gates first", g.name())))?;
        natives.push(kind);
    }
    let steps = natives.iter().map(|&g| table(g).map(PulseTable::steps)).collect::<Result<Vec<_>>>()?;
    let layer_steps = steps.iter().copied().max().unwrap_or(0);
    let mut drives = Vec::new();
    for ((g, &kind), &s) in gates.iter().zip(&natives).zip(&steps) {
        drives.push(Drive { table: table(kind)?, qubits: g.qubits.clone(), start: 0 });
        if s < layer_steps {
            // Pad with identity pulses on each gate qubit; any remainder idles.
            let id = table(NativeGate::Id)?;
            for &q in &g.qubits {
                let mut start = s;
                while start + id.steps() <= layer_steps {
                    drives.push(Drive { table: id, qubits: vec![q], start });
                    start += id.steps();
                }
            }
        }
    }
    Ok(TimedLayer { frame, ideal: gates.to_vec(), drives, steps: layer_steps })
}

/// `out = H ψ` for control terms plus the diagonal ZZ part.
fn apply_h(terms: &[(Term, f64)], diag: &[f64], n: usize, psi: &[C64], out: &mut [C64]) {
    for (o, (p, d)) in out.iter_mut().zip(psi.iter().zip(diag)) {
        *o = p * d;
    }
    let mask = |q: usize| 1usize << (n - 1 - q);
    for &(term, a) in terms {
        match term {
            Term::X(q) => {
                let m = mask(q);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += psi[i ^ m] * a;
                }
            }
            Term::Y(q) => {
                let m = mask(q);
                for (i, o) in out.iter_mut().enumerate() {
                    // Y|0> = i|1>, Y|1> = -i|0>.
                    let s = if i & m != 0 { a } else { -a };
                    *o += psi[i ^ m] * C64::new(0.0, s);
                }
            }
            Term::Zx(c, t) => {
                let (mc, mt) = (mask(c), mask(t));
                for (i, o) in out.iter_mut().enumerate() {
                    let s = if i & mc != 0 { -a } else { a };
                    *o += psi[i ^ mt] * s;
                }
            }
            Term::XxYy(p, q) => {
                let (mp, mq) = (mask(p), mask(q));
                for (i, o) in out.iter_mut().enumerate() {
                    if ((i & mp != 0) as u8) != ((i & mq != 0) as u8) {
                        *o += psi[i ^ mp ^ mq] * (2.0 * a);
                    }
                }
            }
        }
    }
}

/// `exp(-i H dt) ψ` by Taylor series, summed to machine precision.
fn taylor_step(terms: &[(Term, f64)], diag: &[f64], n: usize, dt: f64, psi: &mut [C64], scratch: &mut [Vec<C64>; 2]) {
    let [term, next] = scratch;
    term.copy_from_slice(psi);
    for k in 1..64 {
        apply_h(terms, diag, n, term, next);
        let f = C64::new(0.0, -dt / k as f64);
        let mut norm = 0.0;
        for (t, x) in term.iter_mut().zip(next.iter()) {
            *t = x * f;
            norm += t.norm_sqr();
        }
        for (p, t) in psi.iter_mut().zip(term.iter()) {
            *p += t;
        }
        if norm < 1e-34 {
            break;
        }
    }
}

fn apply_gate(psi: &mut [C64], m: &CMatrix, qubits: &[usize], n: usize) {
    let masks: Vec<usize> = qubits.iter().map(|&q| 1usize << (n - 1 - q)).collect();
    let all: usize = masks.iter().sum();
    let dim = m.nrows();
    let offset = |local: usize| -> usize {
        masks.iter().enumerate().filter(|(j, _)| (local >> (masks.len() - 1 - j)) & 1 == 1).map(|(_, &mk)| mk).sum()
    };
    let offsets: Vec<usize> = (0..dim).map(offset).collect();
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    for base in 0..psi.len() {
        if base & all != 0 {
            continue;
        }
        for (r, b) in buf.iter_mut().enumerate() {
            *b = (0..dim).map(|c| m[(r, c)] * psi[base + offsets[c]]).sum();
        }
        for (r, b) in buf.iter().enumerate() {
            psi[base + offsets[r]] = *b;
        }
    }
}

fn apply_ideal(psi: &mut [C64], gates: &[Gate], n: usize) -> Result<()> {
    for g in gates {
        let m = g.matrix().ok_or_else(|| Error::Sim(format!("no matrix for gate '{}'", g.name())))?;
        apply_gate(psi, &m, &g.qubits, n);
    }
    Ok(())
}

/// Evolves `psi` through one layer.
fn evolve_layer(layer: &TimedLayer, diag: &[f64], n: usize, dt: f64, coupling: CouplingForm, psi: &mut [C64]) {
    let mut scratch = [psi.to_vec(), psi.to_vec()];
    let mut idle = 0usize;
    let flush = |idle: &mut usize, psi: &mut [C64]| {
        if *idle > 0 {
            let t = *idle as f64 * dt;
            for (p, d) in psi.iter_mut().zip(diag) {
                *p *= C64::from_polar(1.0, -d * t);
            }
            *idle = 0;
        }
    };
    for k in 0..layer.steps {
        let terms = layer.terms_at(k, coupling);
        if terms.is_empty() {
            idle += 1;
            continue;
        }
        flush(&mut idle, psi);
        taylor_step(&terms, diag, n, dt, psi, &mut scratch);
    }
    flush(&mut idle, psi);
}

/// Dense `U` of one layer, step by step.
fn layer_unitary_dense(layer: &TimedLayer, device: &DeviceInstance, dt: f64, coupling: CouplingForm) -> CMatrix {
    let n = device.num_qubits();
    let dim = 1 << n;
    let diag = device.zz_diagonal();
    let mut u = quantum::identity(dim);
    for k in 0..layer.steps {
        let terms = layer.terms_at(k, coupling);
        let mut h = CMatrix::from_diagonal(&CVector::from_iterator(dim, diag.iter().map(|&d| C64::new(d, 0.0))));
        for (term, a) in terms {
            let op = match term {
                Term::X(q) => quantum::embed(&quantum::pauli_x(), &[q], n),
                Term::Y(q) => quantum::embed(&quantum::pauli_y(), &[q], n),
                Term::Zx(c, t) => quantum::embed(&CouplingForm::Zx.operator(), &[c, t], n),
                Term::XxYy(p, q) => quantum::embed(&CouplingForm::XxYy.operator(), &[p, q], n),
            };
            h += op * C64::new(a, 0.0);
        }
        u = quantum::expm_hermitian(&h, dt) * u;
    }
    u
}

/// Simulation options.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimOptions {
    pub coupling: CouplingForm,
    /// Multiply full layer unitaries instead of evolving a statevector.
    /// Limited to small devices; used as a cross-check.
    pub dense: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub n_q: usize,
    pub n_c: usize,
    /// Seconds.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// `|⟨ψ_ideal|ψ_actual⟩|²`.
    pub fidelity: f64,
    pub per_layer: Vec<LayerReport>,
    /// Seconds.
    pub total_duration: f64,
    pub policy: Policy,
    pub pulse_backend: Backend,
    pub seed: u64,
}

/// Runs `plan` on `device` with `pulses` from `input` (default `|0…0⟩`) and
/// compares with the ideal gate-by-gate state.
pub fn simulate_plan(
    device: &DeviceInstance,
    plan: &SchedulePlan,
    pulses: &PulseSet,
    input: Option<&CVector>,
    opts: SimOptions,
) -> Result<SimReport> {
    let n = device.num_qubits();
    if plan.num_qubits != n {
        return Err(Error::Sim(format!("plan is for {} qubits, device has {n}", plan.num_qubits)));
    }
    if n > MAX_QUBITS || (opts.dense && n > MAX_DENSE_QUBITS) {
        return Err(Error::Sim(format!("{n} qubits exceeds the simulator limit")));
    }
    if device.lambdas.len() != device.topology.num_edges() {
        return Err(Error::Sim("device needs one coupling strength per edge".into()));
    }
    let dim = 1usize << n;
    let mut psi: Vec<C64> = match input {
        Some(v) if v.len() == dim => v.iter().copied().collect(),
        Some(v) => return Err(Error::Sim(format!("input state has dimension {}, expected {dim}", v.len()))),
        None => {
            let mut v = vec![C64::new(0.0, 0.0); dim];
            v[0] = C64::new(1.0, 0.0);
            v
        }
    };
    let norm0: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let mut ideal = psi.clone();
    let tables = pulses.tables()?;
    let dt = tables.values().next().map_or(pulse::DEFAULT_DT, |t| t.dt);
    let diag = device.zz_diagonal();
    let mut per_layer = Vec::with_capacity(plan.layers.len());
    let mut total = 0.0;
    for layer in &plan.layers {
        let timed = timed_layer(layer.frame.clone(), &layer.gates, &tables)?;
        apply_ideal(&mut psi, &timed.frame, n)?;
        apply_ideal(&mut ideal, &timed.frame, n)?;
        if opts.dense {
            let u = layer_unitary_dense(&timed, device, dt, opts.coupling);
            psi = (&u * CVector::from_vec(psi)).iter().copied().collect();
        } else {
            evolve_layer(&timed, &diag, n, dt, opts.coupling, &mut psi);
        }
        let ideal_gates: Vec<Gate> = timed.ideal.clone();
        apply_ideal(&mut ideal, &ideal_gates, n)?;
        let duration = timed.steps as f64 * dt;
        total += duration;
        per_layer.push(LayerReport { n_q: layer.n_q, n_c: layer.n_c, duration });
    }
    apply_ideal(&mut psi, &plan.trailing, n)?;
    apply_ideal(&mut ideal, &plan.trailing, n)?;
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - norm0).abs() > 1e-8 {
        return Err(Error::Sim(format!("state norm drifted by {:e}", norm - norm0)));
    }
    let overlap: C64 = ideal.iter().zip(&psi).map(|(a, b)| a.conj() * b).sum();
    let fidelity = (overlap.norm_sqr() / (norm0 * norm0)).clamp(0.0, 1.0);
    Ok(SimReport {
        fidelity,
        per_layer,
        total_duration: total,
        policy: plan.policy,
        pulse_backend: pulses.backend,
        seed: device.seed,
    })
}

/// Runs `samples` devices drawn from `N(mu, sigma²)` with seeds
/// `seed, seed + 1, …`, in parallel.
#[allow(clippy::too_many_arguments)]
pub fn simulate_samples(
    topology: &TopologyGraph,
    plan: &SchedulePlan,
    pulses: &PulseSet,
    mu_hz: f64,
    sigma_hz: f64,
    samples: usize,
    seed: u64,
    opts: SimOptions,
) -> Result<Vec<SimReport>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let device = sample_device(topology, mu_hz, sigma_hz, seed + i)?;
            simulate_plan(&device, plan, pulses, None, opts)
        })
        .collect()
}

/// Standalone suppression scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// One driven qubit and one idle neighbour.
    SingleGatePair,
    /// Chain `1-2-3-4` with the two-qubit gate on the middle pair.
    TwoGateChain,
}

impl Scenario {
    pub fn model(self, lambda: f64) -> RegionModel {
        match self {
            Scenario::SingleGatePair => RegionModel::single(&[lambda]),
            Scenario::TwoGateChain => RegionModel::two(&[lambda], &[lambda], lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda_hz: f64,
    /// Floored at [`INFIDELITY_FLOOR`].
    pub infidelity: f64,
    pub raw: f64,
}

/// Infidelity against the tensor target over a list of strengths (Hz).
pub fn suppression_sweep(scenario: Scenario, pulse: &PulseSpec, lambdas_hz: &[f64]) -> Result<Vec<SweepPoint>> {
    drive_noise_eval(scenario, pulse, DriveNoise::default(), lambdas_hz)
}

/// As [`suppression_sweep`] with drive imperfections.
pub fn drive_noise_eval(
    scenario: Scenario,
    pulse: &PulseSpec,
    noise: DriveNoise,
    lambdas_hz: &[f64],
) -> Result<Vec<SweepPoint>> {
    let gate = pulse.target_gate.ok_or_else(|| Error::Sim("sweeps need a pulse for a native gate".into()))?;
    let expected = match scenario {
        Scenario::SingleGatePair => 1,
        Scenario::TwoGateChain => 2,
    };
    if gate.num_qubits() != expected {
        return Err(Error::Sim(format!("{gate} does not fit the {scenario:?} scenario")));
    }
    let target = gate.target();
    lambdas_hz
        .par_iter()
        .map(|&f| {
            let raw = pulse::region_infidelity(&scenario.model(2.0 * PI * f), pulse, &target, noise)?;
            Ok(SweepPoint { lambda_hz: f, infidelity: raw.max(INFIDELITY_FLOOR), raw })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Sim("slope needs at least two positive points".into()));
    }
    let n = points.len() as f64;
    let (sx, sy, sxx, sxy) = points.iter().fold((0.0, 0.0, 0.0, 0.0), |a, &(x, y)| {
        let (x, y) = (x.ln(), y.ln());
        (a.0 + x, a.1 + y, a.2 + x * x, a.3 + x * y)
    });
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::scheduler::{par_sched, schedule, SchedulerConfig};
    use crate::topology::{grid_topology, line_topology};

    #[test]
    fn sampling_is_seeded_and_calibrated() {
        let g = grid_topology(3, 3, 0.0).unwrap();
        let a = sample_device(&g, 200e3, 50e3, 3).unwrap();
        assert_eq!(a, sample_device(&g, 200e3, 50e3, 3).unwrap());
        assert_ne!(a.lambdas, sample_device(&g, 200e3, 50e3, 4).unwrap().lambdas);
        let flat = sample_device(&g, 200e3, 0.0, 1).unwrap();
        assert!(flat.lambdas_hz().iter().all(|&l| (l - 200e3).abs() < 1e-6));
        assert!(sample_device(&g, 200e3, -1.0, 1).is_err());
        // Mean of many draws within 3σ/√N.
        let line = line_topology(2, 0.0).unwrap();
        let draws: Vec<f64> = (0..10_000).map(|s| sample_device(&line, 200e3, 50e3, s).unwrap().lambdas_hz()[0]).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 200e3).abs() < 3.0 * 50e3 / 100.0, "mean {mean}");
    }

    #[test]
    fn gate_application_matches_embedding() {
        let n = 3;
        let psi0: Vec<C64> = (0..8).map(|i| C64::new(i as f64 + 1.0, 0.5 - i as f64)).collect();
        for (m, qs) in [(quantum::rx(0.3), vec![1]), (quantum::rzx(0.7), vec![2, 0]), (quantum::cnot(), vec![0, 1])] {
            let mut psi = psi0.clone();
            apply_gate(&mut psi, &m, &qs, n);
            let expected = quantum::embed(&m, &qs, n) * CVector::from_vec(psi0.clone());
            assert!(psi.iter().zip(expected.iter()).all(|(a, b)| (a - b).norm() < 1e-12));
        }
    }

    #[test]
    fn taylor_step_matches_dense_exponential() {
        let g = grid_topology(2, 2, 300e3).unwrap();
        let device = DeviceInstance::from_topology(&g);
        let terms = vec![(Term::X(0), 4e8), (Term::Y(1), -2e8), (Term::Zx(2, 3), 3e8), (Term::XxYy(0, 3), 1e8)];
        let n = 4;
        let diag = device.zz_diagonal();
        let mut h = CMatrix::from_diagonal(&CVector::from_iterator(16, diag.iter().map(|&d| C64::new(d, 0.0))));
        h += quantum::embed(&quantum::pauli_x(), &[0], n) * C64::new(4e8, 0.0);
        h += quantum::embed(&quantum::pauli_y(), &[1], n) * C64::new(-2e8, 0.0);
        h += quantum::embed(&CouplingForm::Zx.operator(), &[2, 3], n) * C64::new(3e8, 0.0);
        h += quantum::embed(&CouplingForm::XxYy.operator(), &[0, 3], n) * C64::new(1e8, 0.0);
        let psi0: Vec<C64> = (0..16).map(|i| C64::new((i as f64).cos(), (i as f64).sin()) * 0.25).collect();
        let mut psi = psi0.clone();
        let mut scratch = [psi.clone(), psi.clone()];
        taylor_step(&terms, &diag, n, 1e-10, &mut psi, &mut scratch);
        let expected = quantum::expm_hermitian(&h, 1e-10) * CVector::from_vec(psi0);
        assert!(psi.iter().zip(expected.iter()).all(|(a, b)| (a - b).norm() < 1e-13));
    }

    #[test]
    fn exact_pulses_without_coupling_are_perfect() {
        let g = grid_topology(2, 2, 0.0).unwrap();
        let c = Circuit::parse("qubits 4\nh 0\ncx 0 1\nrz(0.3) 3\nrx90 2\nrzx90 3 2\n").unwrap().to_native().unwrap();
        let plan = schedule(&g, &c, &SchedulerConfig::for_topology(&g)).unwrap();
        let report = simulate_plan(&DeviceInstance::from_topology(&g), &plan, &PulseSet::gaussian(), None, SimOptions::default()).unwrap();
        assert!(report.fidelity > 1.0 - 1e-4, "{}", report.fidelity);
        let dense = simulate_plan(
            &DeviceInstance::from_topology(&g),
            &plan,
            &PulseSet::gaussian(),
            None,
            SimOptions { dense: true, ..Default::default() },
        )
        .unwrap();
        assert!((dense.fidelity - report.fidelity).abs() < 1e-10);
    }

    #[test]
    fn statevector_and_dense_paths_agree_with_coupling() {
        let g = grid_topology(2, 2, 200e3).unwrap();
        let c = Circuit::parse("qubits 4\nh 0\ncx 0 1\nh 2\nrx90 3\n").unwrap().to_native().unwrap();
        let plan = par_sched(&g, &c, Durations::default()).unwrap();
        let device = sample_device(&g, 200e3, 50e3, 9).unwrap();
        let a = simulate_plan(&device, &plan, &PulseSet::gaussian(), None, SimOptions::default()).unwrap();
        let b = simulate_plan(&device, &plan, &PulseSet::gaussian(), None, SimOptions { dense: true, ..Default::default() }).unwrap();
        assert!((a.fidelity - b.fidelity).abs() < 1e-10);
        assert!(a.fidelity < 0.9999);
        assert_eq!(a.per_layer.len(), plan.depth());
    }

    #[test]
    fn missing_pulses_and_foreign_gates_are_rejected() {
        let g = line_topology(2, 200e3).unwrap();
        let c = Circuit::parse("qubits 2\nrx90 0\n").unwrap();
        let plan = par_sched(&g, &c, Durations::default()).unwrap();
        let mut pulses = PulseSet::gaussian();
        pulses.pulses.remove(&NativeGate::Rx90);
        assert!(simulate_plan(&DeviceInstance::from_topology(&g), &plan, &pulses, None, SimOptions::default()).is_err());
        let h = Circuit::parse("qubits 2\nh 0\n").unwrap();
        let plan = par_sched(&g, &h, Durations::default()).unwrap();
        assert!(simulate_plan(&DeviceInstance::from_topology(&g), &plan, &PulseSet::gaussian(), None, SimOptions::default()).is_err());
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 5.0, 10.0].iter().map(|&x: &f64| (x, 3.0 * x.powi(4))).collect();
        assert!((loglog_slope(&pts).unwrap() - 4.0).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_err());
    }
}

//! Control pulses for the native gates and the small "basic region" systems
//! they are designed on.
//!
//! A basic region is one gate (one or two qubits) plus the idle neighbours it
//! couples to. Its Hamiltonian (ħ = 1, rad/s) is
//!
//! ```text
//! H(t) = Σ Ω_x(t) σ_x + Ω_y(t) σ_y + Ω_c(t) H_coupling      (control)
//!      + Σ λ_gq σ_z^(g) σ_z^(q)                              (cross-region)
//!      + λ' σ_z^(a) σ_z^(b)                                  (intra-region, two-qubit gates)
//! ```
//!
//! Gate qubits come first in the tensor order, neighbours after. Because the
//! neighbours are never driven, the evolution is block diagonal in their
//! `σ_z` eigenbasis and is computed block by block.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{Durations, Gate, GateKind};
use crate::error::{Error, Result};
use crate::quantum::{self, CMatrix, C64};

pub mod optimize;

pub use optimize::{optimize, OptimizeConfig};

/// Default integration step, 0.1 ns (200 steps per 20 ns).
pub const DEFAULT_DT: f64 = 0.1e-9;

/// Largest region Hilbert space handled densely.
pub const MAX_REGION_DIM: usize = 64;

/// Pulsed native gates. Virtual `rz` needs no pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NativeGate {
    Rx90,
    Id,
    Rzx90,
}

impl NativeGate {
    pub const ALL: [NativeGate; 3] = [NativeGate::Rx90, NativeGate::Id, NativeGate::Rzx90];

    pub fn name(self) -> &'static str {
        match self {
            NativeGate::Rx90 => "rx90",
            NativeGate::Id => "id",
            NativeGate::Rzx90 => "rzx90",
        }
    }

    pub fn num_qubits(self) -> usize {
        match self {
            NativeGate::Rzx90 => 2,
            _ => 1,
        }
    }

    /// Ideal unitary on the gate qubits.
    pub fn target(self) -> CMatrix {
        match self {
            NativeGate::Rx90 => quantum::rx(PI / 2.0),
            NativeGate::Id => quantum::identity(2),
            NativeGate::Rzx90 => quantum::rzx(PI / 2.0),
        }
    }

    /// Rotation angle `θ` of the driving term, `∫Ω dt = θ/2`. The identity
    /// is a full `2π` turn.
    pub fn rotation(self) -> f64 {
        match self {
            NativeGate::Rx90 | NativeGate::Rzx90 => PI / 2.0,
            NativeGate::Id => 2.0 * PI,
        }
    }

    /// Axis carrying the rotation.
    pub fn drive_axis(self) -> Axis {
        match self {
            NativeGate::Rzx90 => Axis::Coupling,
            _ => Axis::X,
        }
    }

    pub fn of(gate: &Gate) -> Option<NativeGate> {
        match gate.kind {
            GateKind::RxHalfPi => Some(NativeGate::Rx90),
            GateKind::Identity => Some(NativeGate::Id),
            GateKind::RzxHalfPi => Some(NativeGate::Rzx90),
            _ => None,
        }
    }
}

impl fmt::Display for NativeGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NativeGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NativeGate::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Pulse(format!("unknown native gate '{s}' (expected rx90, id or rzx90)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Plain Gaussian pulses, the reference.
    Gaussian,
    /// Fidelity-based optimal control averaged over coupling strengths.
    Optctrl,
    /// Cancellation of the first-order crosstalk term.
    Pert,
    /// Composite sequences of Gaussian pulses.
    Dcg,
}

impl Backend {
    pub const ALL: [Backend; 4] = [Backend::Gaussian, Backend::Optctrl, Backend::Pert, Backend::Dcg];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Gaussian => "gaussian",
            Backend::Optctrl => "optctrl",
            Backend::Pert => "pert",
            Backend::Dcg => "dcg",
        }
    }

    pub fn durations(self) -> Durations {
        match self {
            Backend::Dcg => Durations::dcg(),
            _ => Durations::default(),
        }
    }

    pub fn duration(self, gate: NativeGate) -> f64 {
        let d = self.durations();
        match gate {
            NativeGate::Rx90 => d.rx90,
            NativeGate::Id => d.identity,
            NativeGate::Rzx90 => d.rzx90,
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Pulse(format!("unknown pulse backend '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    /// The two-qubit coupling term of the region model.
    Coupling,
}

/// Form of the two-qubit coupling term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingForm {
    /// `σ_z ⊗ σ_x`, cross resonance.
    #[default]
    Zx,
    /// `σ_x ⊗ σ_x + σ_y ⊗ σ_y`.
    XxYy,
}

impl CouplingForm {
    pub fn operator(self) -> CMatrix {
        use quantum::{kron, pauli_x, pauli_y, pauli_z};
        match self {
            CouplingForm::Zx => kron(&pauli_z(), &pauli_x()),
            CouplingForm::XxYy => kron(&pauli_x(), &pauli_x()) + kron(&pauli_y(), &pauli_y()),
        }
    }
}

/// A Gaussian segment of a composite envelope. Centred in its window with
/// `σ = length / 6`, shifted down to vanish at both ends and scaled so that
/// `∫Ω dt = angle / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub angle: f64,
    /// Start time, seconds.
    pub start: f64,
    /// Length, seconds.
    pub length: f64,
}

impl Segment {
    fn peak(&self) -> f64 {
        let sigma = self.length / 6.0;
        let floor = (-4.5f64).exp();
        let area = sigma * (2.0 * PI).sqrt() * statrs::function::erf::erf(3.0 / 2f64.sqrt()) - self.length * floor;
        self.angle / 2.0 / area
    }

    fn value(&self, t: f64) -> f64 {
        let tau = t - self.start;
        if !(0.0..=self.length).contains(&tau) || self.length <= 0.0 {
            return 0.0;
        }
        let sigma = self.length / 6.0;
        let x = (tau - self.length / 2.0) / sigma;
        self.peak() * ((-0.5 * x * x).exp() - (-4.5f64).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Envelope {
    /// `Ω(t) = Σ_j (A_j / 2) [1 + cos(2π j t / T - π)]`, `A_j` in rad/s.
    Fourier { fourier_a: Vec<f64> },
    /// Back-to-back Gaussian segments.
    Segments { segments: Vec<Segment> },
}

/// Fourier envelope value at `t ∈ [0, T]`.
pub fn fourier_eval(coeffs: &[f64], duration: f64, t: f64) -> Result<f64> {
    let slack = duration * 1e-12;
    if !(-slack..=duration + slack).contains(&t) {
        return Err(Error::Pulse(format!("time {t:e} s outside the pulse window [0, {duration:e}]")));
    }
    Ok(fourier_value(coeffs, duration, t))
}

fn fourier_value(coeffs: &[f64], duration: f64, t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(j, a)| a / 2.0 * (1.0 + (2.0 * PI * (j + 1) as f64 * t / duration - PI).cos()))
        .sum()
}

impl Envelope {
    pub fn value(&self, duration: f64, t: f64) -> f64 {
        match self {
            Envelope::Fourier { fourier_a } => fourier_value(fourier_a, duration, t),
            Envelope::Segments { segments } => segments.iter().map(|s| s.value(t)).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    /// Gate-local qubit indices: `[0]` or `[1]` for drives, `[0, 1]` for the coupling.
    pub target: Vec<usize>,
    pub axis: Axis,
    #[serde(flatten)]
    pub envelope: Envelope,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    #[serde(default)]
    pub iterations: usize,
    #[serde(default = "default_true")]
    pub converged: bool,
}

fn default_true() -> bool {
    true
}

/// Control envelopes for one gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// `None` for ad hoc rotations.
    pub target_gate: Option<NativeGate>,
    pub backend: Backend,
    #[serde(rename = "T_ns")]
    pub t_ns: f64,
    /// Piecewise-constant steps over the pulse.
    pub steps: usize,
    pub channels: Vec<Channel>,
    #[serde(default)]
    pub meta: PulseMeta,
}

impl PulseSpec {
    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.t_ns * 1e-9
    }

    pub fn dt(&self) -> f64 {
        self.duration() / self.steps as f64
    }

    /// Number of gate qubits the channels act on.
    pub fn num_qubits(&self) -> usize {
        self.channels.iter().flat_map(|c| c.target.iter()).max().map_or(1, |&m| m + 1)
    }

    /// Channel amplitudes at time `t`.
    pub fn amplitudes(&self, t: f64) -> Vec<f64> {
        let duration = self.duration();
        self.channels.iter().map(|c| c.envelope.value(duration, t)).collect()
    }

    /// Amplitudes at the midpoint of step `k`.
    pub fn sample(&self, k: usize) -> Vec<f64> {
        self.amplitudes((k as f64 + 0.5) * self.dt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_ns > 0.0 && self.t_ns.is_finite()) || self.steps == 0 {
            return Err(Error::Pulse("pulse needs a positive duration and at least one step".into()));
        }
        for c in &self.channels {
            let ok = match c.axis {
                Axis::Coupling => c.target.len() == 2 && c.target[0] != c.target[1],
                _ => c.target.len() == 1,
            };
            if !ok || c.target.iter().any(|&q| q > 1) {
                return Err(Error::Pulse(format!("channel {:?} on {:?} is malformed", c.axis, c.target)));
            }
            match &c.envelope {
                Envelope::Fourier { fourier_a } if fourier_a.iter().any(|a| !a.is_finite()) => {
                    return Err(Error::Pulse("non-finite Fourier coefficient".into()));
                }
                Envelope::Segments { segments } => {
                    let mut end = 0.0;
                    for s in segments {
                        let tol = 1e-15;
                        if s.start + tol < end || s.length <= 0.0 || s.start + s.length > self.duration() + tol {
                            return Err(Error::Pulse("segments must be ordered, disjoint and inside the pulse".into()));
                        }
                        end = s.start + s.length;
                    }
                }
                _ => {}
            }
        }
        if let Some(g) = self.target_gate {
            if self.num_qubits() > g.num_qubits() {
                return Err(Error::Pulse(format!("pulse for {g} drives {} qubits", self.num_qubits())));
            }
        }
        Ok(())
    }

    /// Control Hamiltonian on the gate qubits (`2^n` square, `n = num_qubits`)
    /// for given channel amplitudes.
    pub fn control_hamiltonian(&self, amps: &[f64], n: usize, coupling: CouplingForm) -> CMatrix {
        let dim = 1 << n;
        let mut h = CMatrix::zeros(dim, dim);
        for (c, &a) in self.channels.iter().zip(amps) {
            if a == 0.0 {
                continue;
            }
            let op = match c.axis {
                Axis::X => quantum::embed(&quantum::pauli_x(), &c.target, n),
                Axis::Y => quantum::embed(&quantum::pauli_y(), &c.target, n),
                Axis::Coupling => quantum::embed(&coupling.operator(), &c.target, n),
            };
            h += op * C64::new(a, 0.0);
        }
        h
    }
}

/// Seconds to nanoseconds, rounded to femtoseconds.
pub(crate) fn to_ns(duration: f64) -> f64 {
    (duration * 1e15).round() / 1e6
}

fn steps_for(duration: f64) -> usize {
    ((duration / DEFAULT_DT).round() as usize).max(1)
}

/// Single Gaussian x rotation by `angle` over `duration` seconds.
pub fn gaussian_pulse(angle: f64, duration: f64) -> PulseSpec {
    PulseSpec {
        target_gate: None,
        backend: Backend::Gaussian,
        t_ns: to_ns(duration),
        steps: steps_for(duration),
        channels: vec![Channel {
            target: vec![0],
            axis: Axis::X,
            envelope: Envelope::Segments { segments: vec![Segment { angle, start: 0.0, length: duration }] },
        }],
        meta: PulseMeta::default(),
    }
}

/// Gaussian reference pulse for a native gate at its standard duration.
pub fn baseline_pulse(gate: NativeGate) -> PulseSpec {
    let duration = Backend::Gaussian.duration(gate);
    let mut p = gaussian_pulse(gate.rotation(), duration);
    p.target_gate = Some(gate);
    if gate == NativeGate::Rzx90 {
        p.channels[0].target = vec![0, 1];
        p.channels[0].axis = Axis::Coupling;
    }
    p
}

/// Composite Gaussian sequences. `rx90` is 120 ns: π, π/2, -π/2, π (20 ns
/// each) and a final π/2 stretched over 40 ns. `id` is 40 ns: two π pulses.
pub fn dcg_sequence(gate: NativeGate) -> Result<PulseSpec> {
    let parts: Vec<(f64, f64, f64)> = match gate {
        NativeGate::Rx90 => vec![
            (PI, 0.0, 20.0),
            (PI / 2.0, 20.0, 20.0),
            (-PI / 2.0, 40.0, 20.0),
            (PI, 60.0, 20.0),
            (PI / 2.0, 80.0, 40.0),
        ],
        NativeGate::Id => vec![(PI, 0.0, 20.0), (PI, 20.0, 20.0)],
        NativeGate::Rzx90 => return Err(Error::Pulse("no composite sequence for two-qubit gates".into())),
    };
    let segments: Vec<Segment> =
        parts.into_iter().map(|(angle, start, len)| Segment { angle, start: start / 1e9, length: len / 1e9 }).collect();
    let duration = Backend::Dcg.duration(gate);
    Ok(PulseSpec {
        target_gate: Some(gate),
        backend: Backend::Dcg,
        t_ns: to_ns(duration),
        steps: steps_for(duration),
        channels: vec![Channel { target: vec![0], axis: Axis::X, envelope: Envelope::Segments { segments } }],
        meta: PulseMeta::default(),
    })
}

/// A basic region: gate qubits first, then idle neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionModel {
    pub gate_qubits: usize,
    /// For each neighbour, its couplings `(gate qubit, λ in rad/s)`.
    pub neighbors: Vec<Vec<(usize, f64)>>,
    /// `λ'` between the two gate qubits, rad/s.
    pub intra_lambda: f64,
    pub coupling: CouplingForm,
}

impl RegionModel {
    /// One gate qubit with a neighbour per entry of `lambdas`.
    pub fn single(lambdas: &[f64]) -> Self {
        RegionModel {
            gate_qubits: 1,
            neighbors: lambdas.iter().map(|&l| vec![(0, l)]).collect(),
            intra_lambda: 0.0,
            coupling: CouplingForm::Zx,
        }
    }

    /// Two gate qubits with separate neighbour sets and intra coupling `intra`.
    pub fn two(lambdas_a: &[f64], lambdas_b: &[f64], intra: f64) -> Self {
        let neighbors = lambdas_a.iter().map(|&l| vec![(0, l)]).chain(lambdas_b.iter().map(|&l| vec![(1, l)])).collect();
        RegionModel { gate_qubits: 2, neighbors, intra_lambda: intra, coupling: CouplingForm::Zx }
    }

    /// Region for `gate` with `m` neighbours per gate qubit, every coupling
    /// (intra included) at `lambda` rad/s.
    pub fn for_gate(gate: NativeGate, m: usize, lambda: f64) -> Self {
        let l = vec![lambda; m];
        match gate.num_qubits() {
            1 => RegionModel::single(&l),
            _ => RegionModel::two(&l, &l, lambda),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.gate_qubits + self.neighbors.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits()
    }

    /// `λ`: total cross-region coupling.
    pub fn total_lambda(&self) -> f64 {
        self.neighbors.iter().flatten().map(|&(_, l)| l).sum()
    }

    /// Every coupling, intra included, set to `lambda`.
    pub fn with_uniform_lambda(&self, lambda: f64) -> Self {
        let mut m = self.clone();
        for n in &mut m.neighbors {
            for c in n.iter_mut() {
                c.1 = lambda;
            }
        }
        if m.gate_qubits == 2 {
            m.intra_lambda = lambda;
        }
        m
    }

    fn check(&self, pulse: &PulseSpec) -> Result<()> {
        if !(1..=2).contains(&self.gate_qubits) {
            return Err(Error::Pulse("regions hold one or two gate qubits".into()));
        }
        if self.dim() > MAX_REGION_DIM {
            return Err(Error::Pulse(format!("region of {} qubits exceeds the dense limit", self.num_qubits())));
        }
        if self.neighbors.iter().flatten().any(|&(g, l)| g >= self.gate_qubits || !(l >= 0.0 && l.is_finite())) {
            return Err(Error::Pulse("neighbour couplings must name a gate qubit and be non-negative".into()));
        }
        pulse.validate()?;
        if pulse.num_qubits() > self.gate_qubits {
            return Err(Error::Pulse(format!(
                "pulse drives {} qubits but the region has {}",
                pulse.num_qubits(),
                self.gate_qubits
            )));
        }
        Ok(())
    }

    /// `σ_z` coefficient on each gate qubit for neighbour configuration `s`
    /// (bit `i` of `s`, most significant first, is neighbour `i` in `|1⟩`).
    fn zz_shift(&self, s: usize) -> Vec<f64> {
        let m = self.neighbors.len();
        let mut shift = vec![0.0; self.gate_qubits];
        for (i, n) in self.neighbors.iter().enumerate() {
            let z = if (s >> (m - 1 - i)) & 1 == 1 { -1.0 } else { 1.0 };
            for &(g, l) in n {
                shift[g] += z * l;
            }
        }
        shift
    }

    /// Static part on the gate qubits for configuration `s`, with an extra
    /// `detuning` (rad/s) times `σ_z / 2` on each gate qubit.
    fn static_block(&self, s: usize, detuning: f64) -> CMatrix {
        let n = self.gate_qubits;
        let dim = 1 << n;
        let shift = self.zz_shift(s);
        let mut h = CMatrix::zeros(dim, dim);
        for idx in 0..dim {
            let mut e = 0.0;
            for (g, &c) in shift.iter().enumerate() {
                let z = if (idx >> (n - 1 - g)) & 1 == 1 { -1.0 } else { 1.0 };
                e += (c + detuning / 2.0) * z;
            }
            if n == 2 {
                let za = if idx & 2 != 0 { -1.0 } else { 1.0 };
                let zb = if idx & 1 != 0 { -1.0 } else { 1.0 };
                e += self.intra_lambda * za * zb;
            }
            h[(idx, idx)] = C64::new(e, 0.0);
        }
        h
    }

    /// Assembles per-configuration gate-qubit blocks into the region operator.
    fn assemble(&self, blocks: &[CMatrix]) -> CMatrix {
        let gd = 1 << self.gate_qubits;
        let nd = blocks.len();
        let mut out = CMatrix::zeros(gd * nd, gd * nd);
        for (s, b) in blocks.iter().enumerate() {
            for r in 0..gd {
                for c in 0..gd {
                    out[(r * nd + s, c * nd + s)] = b[(r, c)];
                }
            }
        }
        out
    }
}

/// Drive imperfections applied at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveNoise {
    /// Carrier detuning `Δ_f` in Hz, added as `2πΔ_f σ_z / 2` on gate qubits.
    pub detuning_hz: f64,
    /// Multiplicative envelope factor.
    pub amplitude_scale: f64,
}

impl Default for DriveNoise {
    fn default() -> Self {
        DriveNoise { detuning_hz: 0.0, amplitude_scale: 1.0 }
    }
}

/// Full region Hamiltonian at time `t`.
pub fn build_hamiltonian(model: &RegionModel, pulse: &PulseSpec, t: f64) -> Result<CMatrix> {
    model.check(pulse)?;
    let n = model.num_qubits();
    let gate_ctrl = pulse.control_hamiltonian(&pulse.amplitudes(t), model.gate_qubits, model.coupling);
    let pad = quantum::identity(1 << model.neighbors.len());
    let mut h = quantum::kron(&gate_ctrl, &pad);
    let z = quantum::pauli_z();
    for (i, nb) in model.neighbors.iter().enumerate() {
        for &(g, l) in nb {
            h += quantum::embed(&quantum::kron(&z, &z), &[g, model.gate_qubits + i], n) * C64::new(l, 0.0);
        }
    }
    if model.gate_qubits == 2 && model.intra_lambda != 0.0 {
        h += quantum::embed(&quantum::kron(&z, &z), &[0, 1], n) * C64::new(model.intra_lambda, 0.0);
    }
    Ok(h)
}

/// Per-step control Hamiltonians on the gate qubits.
fn control_steps(pulse: &PulseSpec, n: usize, coupling: CouplingForm, scale: f64) -> Vec<CMatrix> {
    (0..pulse.steps)
        .map(|k| {
            let amps: Vec<f64> = pulse.sample(k).into_iter().map(|a| a * scale).collect();
            pulse.control_hamiltonian(&amps, n, coupling)
        })
        .collect()
}

fn propagate(steps: &[CMatrix], fixed: &CMatrix, dt: f64) -> CMatrix {
    let dim = fixed.nrows();
    let mut u = quantum::identity(dim);
    for h in steps {
        u = quantum::expm_hermitian(&(h + fixed), dt) * u;
    }
    u
}

/// Gate-qubit blocks of the region evolution, one per neighbour configuration.
pub fn evolve_blocks(model: &RegionModel, pulse: &PulseSpec, noise: DriveNoise) -> Result<Vec<CMatrix>> {
    model.check(pulse)?;
    let ctrl = control_steps(pulse, model.gate_qubits, model.coupling, noise.amplitude_scale);
    let detuning = 2.0 * PI * noise.detuning_hz;
    let dt = pulse.dt();
    Ok((0..1usize << model.neighbors.len())
        .map(|s| propagate(&ctrl, &model.static_block(s, detuning), dt))
        .collect())
}

/// Region evolution `U(T)` with the pulse's own step grid (midpoint samples).
pub fn evolve(model: &RegionModel, pulse: &PulseSpec) -> Result<CMatrix> {
    evolve_steps(model, pulse, pulse.steps)
}

/// As [`evolve`] with an explicit number of steps.
pub fn evolve_steps(model: &RegionModel, pulse: &PulseSpec, steps: usize) -> Result<CMatrix> {
    if steps == 0 {
        return Err(Error::Pulse("at least one step is required".into()));
    }
    let p = PulseSpec { steps, ..pulse.clone() };
    Ok(model.assemble(&evolve_blocks(model, &p, DriveNoise::default())?))
}

/// Control-only evolution `U_ctrl(T)` on the gate qubits.
pub fn control_unitary(pulse: &PulseSpec, n: usize, coupling: CouplingForm) -> CMatrix {
    let ctrl = control_steps(pulse, n, coupling, 1.0);
    propagate(&ctrl, &CMatrix::zeros(1 << n, 1 << n), pulse.dt())
}

/// Evolution under control plus intra-region coupling only, the reference
/// for two-qubit regions.
pub fn dressed_target(model: &RegionModel, pulse: &PulseSpec) -> Result<CMatrix> {
    let bare = RegionModel { neighbors: Vec::new(), ..model.clone() };
    let blocks = evolve_blocks(&bare, pulse, DriveNoise::default())?;
    Ok(blocks.into_iter().next().unwrap())
}

/// Average gate fidelity `(|Tr(U†V)|² + d) / (d (d + 1))`.
pub fn avg_gate_fidelity(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() {
        return Err(Error::Pulse(format!("cannot compare {:?} with {:?}", u.shape(), v.shape())));
    }
    Ok(quantum::gate_fidelity(u, v))
}

/// `1 - F_g(target, actual)` for unitaries, computed from the phase-aligned
/// difference so that tiny infidelities keep their relative precision.
pub fn infidelity(target: &CMatrix, actual: &CMatrix) -> f64 {
    let d = target.nrows() as f64;
    let tr = (target.adjoint() * actual).trace();
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { C64::new(1.0, 0.0) };
    // For unitaries, ||V - e^{iφ}U||² = 2(d - |Tr(U†V)|).
    let gap = (actual - target * phase).iter().map(|z| z.norm_sqr()).sum::<f64>() / 2.0;
    let abs_tr = tr.norm();
    (gap * (d + abs_tr) / (d * (d + 1.0))).max(0.0)
}

/// Infidelity of blocks against `target ⊗ I` without assembling the full matrix.
fn blocks_infidelity(target: &CMatrix, blocks: &[CMatrix]) -> f64 {
    let gd = target.nrows() as f64;
    let d = gd * blocks.len() as f64;
    let tr: C64 = blocks.iter().map(|b| (target.adjoint() * b).trace()).sum();
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { C64::new(1.0, 0.0) };
    let gap: f64 = blocks.iter().map(|b| (b - target * phase).iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() / 2.0;
    (gap * (d + tr.norm()) / (d * (d + 1.0))).max(0.0)
}

/// Crosstalk infidelity of the region: `1 - F_g(U(T), U_ref ⊗ I)`, where
/// `U_ref` is `target` for one gate qubit and the intra-dressed control
/// evolution for two.
pub fn region_infidelity(model: &RegionModel, pulse: &PulseSpec, target: &CMatrix, noise: DriveNoise) -> Result<f64> {
    let blocks = evolve_blocks(model, pulse, noise)?;
    let reference = if model.gate_qubits == 2 { dressed_target(model, pulse)? } else { target.clone() };
    if reference.nrows() != blocks[0].nrows() {
        return Err(Error::Pulse("target does not match the region's gate qubits".into()));
    }
    Ok(blocks_infidelity(&reference, &blocks))
}

/// `∫ U_ctrl(t)† σ_z^(g) U_ctrl(t) dt` for each gate qubit `g`, integrated
/// exactly over each piecewise-constant step, together with `U_ctrl(T)`.
pub(crate) fn toggling_integrals(
    pulse: &PulseSpec,
    n: usize,
    coupling: CouplingForm,
) -> (CMatrix, Vec<CMatrix>) {
    let dim = 1 << n;
    let dt = pulse.dt();
    let zs: Vec<CMatrix> = (0..n).map(|g| quantum::embed(&quantum::pauli_z(), &[g], n)).collect();
    let mut k_int = vec![CMatrix::zeros(dim, dim); n];
    let mut u = quantum::identity(dim);
    for h in control_steps(pulse, n, coupling, 1.0) {
        let eig = h.symmetric_eigen();
        let v = &eig.eigenvectors;
        let e = &eig.eigenvalues;
        // ∫_0^dt e^{iω s} ds for each pair of eigenvalues.
        let weight = CMatrix::from_fn(dim, dim, |j, k| {
            let w = e[j] - e[k];
            if (w * dt).abs() < 1e-8 {
                C64::new(dt, 0.5 * w * dt * dt)
            } else {
                (C64::new(0.0, w * dt).exp() - 1.0) / C64::new(0.0, w)
            }
        });
        let rotated = v.adjoint() * &u;
        let rotated_dag = rotated.adjoint();
        for (k, z) in k_int.iter_mut().zip(&zs) {
            let zi = v.adjoint() * z * v;
            *k += &rotated_dag * zi.component_mul(&weight) * &rotated;
        }
        let phases = e.map(|x| C64::from_polar(1.0, -x * dt));
        u = v * CMatrix::from_diagonal(&phases) * rotated;
    }
    (u, k_int)
}

/// First-order interaction-picture crosstalk term
/// `U⁽¹⁾(T) = -i ∫ U_ctrl† H_X U_ctrl dt` on the full region, with
/// `H_X = Σ (λ_gq / λ) σ_z^(g) σ_z^(q)`. Zero when the region has no coupling.
pub fn pert_first_order(model: &RegionModel, pulse: &PulseSpec) -> Result<CMatrix> {
    model.check(pulse)?;
    let lambda = model.total_lambda();
    let dim = model.dim();
    if lambda == 0.0 {
        return Ok(CMatrix::zeros(dim, dim));
    }
    let n = model.num_qubits();
    let (_, k_int) = toggling_integrals(pulse, model.gate_qubits, model.coupling);
    let pad = quantum::identity(1 << model.neighbors.len());
    let mut out = CMatrix::zeros(dim, dim);
    for (i, nb) in model.neighbors.iter().enumerate() {
        let zq = quantum::embed(&quantum::pauli_z(), &[model.gate_qubits + i], n);
        for &(g, l) in nb {
            out += quantum::kron(&k_int[g], &pad) * &zq * C64::new(l / lambda, 0.0);
        }
    }
    Ok(out * C64::new(0.0, -1.0))
}

/// `‖U⁽¹⁾(T)‖_F - w F_g(U_ctrl(T), target)`.
pub fn pert_loss(model: &RegionModel, pulse: &PulseSpec, target: &CMatrix, w: f64) -> Result<f64> {
    let first = pert_first_order(model, pulse)?;
    let u_ctrl = control_unitary(pulse, model.gate_qubits, model.coupling);
    Ok(quantum::frobenius(&first) - w * avg_gate_fidelity(target, &u_ctrl)?)
}

/// `-mean_λ F_g(U(T), U_ref ⊗ I) - w F_g(U_ctrl(T), target)`, every coupling
/// set to each sampled `λ` (rad/s) in turn.
pub fn optctrl_loss(
    model: &RegionModel,
    pulse: &PulseSpec,
    target: &CMatrix,
    w: f64,
    lambda_samples: &[f64],
) -> Result<f64> {
    if lambda_samples.is_empty() {
        return Err(Error::Pulse("optctrl loss needs at least one coupling sample".into()));
    }
    let u_ctrl = control_unitary(pulse, model.gate_qubits, model.coupling);
    let gate_term = w * avg_gate_fidelity(target, &u_ctrl)?;
    let mut total = 0.0;
    for &l in lambda_samples {
        let m = model.with_uniform_lambda(l);
        total += 1.0 - region_infidelity(&m, pulse, target, DriveNoise::default())?;
    }
    Ok(-total / lambda_samples.len() as f64 - gate_term)
}

/// A pulse placed on region gate qubits, starting at step `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedPulse {
    pub pulse: PulseSpec,
    pub qubits: Vec<usize>,
    pub start: usize,
}

/// A region holding several gates, driven by pulses designed on basic regions.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralRegion {
    pub gate_qubits: usize,
    /// For each idle neighbour, its couplings `(gate qubit, λ)`.
    pub neighbors: Vec<Vec<(usize, f64)>>,
    /// Couplings `(p, q, λ')` between gate qubits.
    pub intra: Vec<(usize, usize, f64)>,
    pub coupling: CouplingForm,
}

impl GeneralRegion {
    fn control_steps(&self, pulses: &[PlacedPulse], steps: usize) -> Result<Vec<CMatrix>> {
        let n = self.gate_qubits;
        let dim = 1usize << n;
        if n + self.neighbors.len() > 10 {
            return Err(Error::Pulse("general region exceeds ten qubits".into()));
        }
        let dt = pulses.first().map_or(DEFAULT_DT, |p| p.pulse.dt());
        for p in pulses {
            p.pulse.validate()?;
            if ((p.pulse.dt() - dt) / dt).abs() > 1e-9 || p.qubits.len() < p.pulse.num_qubits() {
                return Err(Error::Pulse("placed pulses need a common step and enough qubits".into()));
            }
            if p.qubits.iter().any(|&q| q >= n) || p.start + p.pulse.steps > steps {
                return Err(Error::Pulse("placed pulse falls outside the region".into()));
            }
        }
        let mut out = vec![CMatrix::zeros(dim, dim); steps];
        for p in pulses {
            let local = p.pulse.num_qubits();
            for k in 0..p.pulse.steps {
                let h = p.pulse.control_hamiltonian(&p.pulse.sample(k), local, self.coupling);
                out[p.start + k] += quantum::embed(&h, &p.qubits[..local], n);
            }
        }
        Ok(out)
    }

    fn static_block(&self, s: usize, with_neighbors: bool) -> CMatrix {
        let n = self.gate_qubits;
        let m = self.neighbors.len();
        let dim = 1usize << n;
        let z = |idx: usize, q: usize| if (idx >> (n - 1 - q)) & 1 == 1 { -1.0 } else { 1.0 };
        let mut h = CMatrix::zeros(dim, dim);
        for idx in 0..dim {
            let mut e: f64 = self.intra.iter().map(|&(p, q, l)| l * z(idx, p) * z(idx, q)).sum();
            if with_neighbors {
                for (i, nb) in self.neighbors.iter().enumerate() {
                    let zn = if (s >> (m - 1 - i)) & 1 == 1 { -1.0 } else { 1.0 };
                    e += nb.iter().map(|&(g, l)| l * zn * z(idx, g)).sum::<f64>();
                }
            }
            h[(idx, idx)] = C64::new(e, 0.0);
        }
        h
    }

    /// `1 - F_g(U(T), Ũ(T) ⊗ I)`, where `Ũ` evolves the gate qubits under the
    /// pulses and intra-region couplings only.
    pub fn cross_region_infidelity(&self, pulses: &[PlacedPulse], steps: usize) -> Result<f64> {
        let ctrl = self.control_steps(pulses, steps)?;
        let dt = pulses.first().map_or(DEFAULT_DT, |p| p.pulse.dt());
        let reference = propagate(&ctrl, &self.static_block(0, false), dt);
        let blocks: Vec<CMatrix> = (0..1usize << self.neighbors.len())
            .map(|s| propagate(&ctrl, &self.static_block(s, true), dt))
            .collect();
        Ok(blocks_infidelity(&reference, &blocks))
    }
}

/// Largest deviation of `U†U` from the identity.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let d = u.nrows();
    (u.adjoint() * u - quantum::identity(d)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

//! Ramsey measurement of the effective ZZ strength on a small chain.
//!
//! Qubit 1 is probed while qubit 0 is held in `|0⟩` or `|1⟩` (qubit 2, when
//! present, stays in `|0⟩`). Each run is `rx90`, a wait built from
//! identity-length slots, a frame rotation by `2π f_det τ` and a closing
//! `rx90`. The two population curves are fitted to cosines and the effective
//! strength is the difference of their frequencies.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{layer_unitary_dense, timed_layer, DeviceInstance, PulseSet, SimOptions, TimedLayer};
use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::pulse::optimize::levenberg_marquardt;
use crate::pulse::NativeGate;
use crate::quantum::{self, CVector, C64};

/// What runs during the wait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RamseyPolicy {
    /// Free evolution.
    Bare,
    /// Identity pulses on the probed qubit.
    SuppressedB,
    /// Identity pulses on the spectators.
    SuppressedC,
}

impl std::str::FromStr for RamseyPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bare" => Ok(RamseyPolicy::Bare),
            "b" | "suppressed_b" => Ok(RamseyPolicy::SuppressedB),
            "c" | "suppressed_c" => Ok(RamseyPolicy::SuppressedC),
            _ => Err(Error::Sim(format!("unknown Ramsey policy '{s}' (bare, b or c)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyConfig {
    /// Wait times in seconds, evenly spaced multiples of the identity duration.
    pub delays: Vec<f64>,
    /// Artificial detuning added through the frame, Hz.
    pub detuning_hz: f64,
}

impl Default for RamseyConfig {
    fn default() -> Self {
        RamseyConfig { delays: (0..64).map(|k| k as f64 * 160e-9).collect(), detuning_hz: 2e6 }
    }
}

/// `offset + amplitude cos(2π f τ + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineFit {
    pub offset: f64,
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub phase: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyResult {
    pub policy: RamseyPolicy,
    pub delays: Vec<f64>,
    /// Population of `|1⟩` on the probed qubit, spectator in `|0⟩` then `|1⟩`.
    pub populations: [Vec<f64>; 2],
    pub fits: [CosineFit; 2],
    /// `|f_1 - f_0|`, Hz.
    pub effective_hz: f64,
}

/// Fits `p(τ)` with a cosine: FFT peak for the starting frequency, then
/// least-squares refinement. Fails when `R² < 0.9`.
pub fn fit_cosine(delays: &[f64], p: &[f64]) -> Result<CosineFit> {
    let n = delays.len();
    if n < 8 || p.len() != n {
        return Err(Error::Sim("cosine fit needs at least eight samples".into()));
    }
    let step = delays[1] - delays[0];
    if step.is_nan() || step <= 0.0 || delays.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-6 * step) {
        return Err(Error::Sim("cosine fit needs evenly spaced delays".into()));
    }
    let mean = p.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = p.iter().map(|x| (x - mean).powi(2)).sum();
    if ss_tot < 1e-20 {
        return Err(Error::Sim("Ramsey signal does not oscillate".into()));
    }

    let padded = 16 * n.next_power_of_two();
    let mut buf: Vec<Complex<f64>> =
        p.iter().map(|x| Complex::new(x - mean, 0.0)).chain(std::iter::repeat(Complex::new(0.0, 0.0))).take(padded).collect();
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let peak = (1..padded / 2).max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm())).unwrap_or(1);
    // Work in µs and MHz for conditioning.
    let f0 = peak as f64 / (padded as f64 * step) * 1e-6;
    let z = buf[peak];
    let t: Vec<f64> = delays.iter().map(|d| (d - delays[0]) * 1e6).collect();
    let x0 = [mean, 2.0 * z.norm() / n as f64, f0, z.arg()];
    let residual = |x: &[f64]| -> Vec<f64> {
        t.iter().zip(p).map(|(&tt, &y)| x[0] + x[1] * (2.0 * PI * x[2] * tt + x[3]).cos() - y).collect()
    };
    let sol = levenberg_marquardt(&residual, &x0, 200, 1e-14);
    let ss_res = 2.0 * sol.cost;
    let r_squared = 1.0 - ss_res / ss_tot;
    if r_squared < 0.9 {
        return Err(Error::Sim(format!("cosine fit failed (R² = {r_squared:.3})")));
    }
    let (mut amplitude, mut frequency, mut phase) = (sol.x[1], sol.x[2], sol.x[3]);
    if amplitude < 0.0 {
        amplitude = -amplitude;
        phase += PI;
    }
    if frequency < 0.0 {
        frequency = -frequency;
        phase = -phase;
    }
    // Back to absolute time.
    phase -= 2.0 * PI * frequency * delays[0] * 1e6;
    Ok(CosineFit {
        offset: sol.x[0],
        amplitude,
        frequency_hz: frequency * 1e6,
        phase: phase.rem_euclid(2.0 * PI),
        r_squared,
    })
}

/// Simulates both Ramsey curves on a two- or three-qubit chain and returns
/// the fitted effective ZZ strength.
pub fn ramsey_effective_zz(
    device: &DeviceInstance,
    pulses: &PulseSet,
    policy: RamseyPolicy,
    cfg: &RamseyConfig,
    opts: SimOptions,
) -> Result<RamseyResult> {
    let n = device.num_qubits();
    if !(2..=3).contains(&n) || device.topology.edge_between(0, 1).is_none() {
        return Err(Error::Sim("Ramsey needs a chain of two or three qubits".into()));
    }
    let tables = pulses.tables()?;
    let id = tables.get(&NativeGate::Id).ok_or_else(|| Error::Sim("no identity pulse".into()))?;
    let dt = id.dt;
    let slot = id.steps() as f64 * dt;
    let slots: Vec<usize> = cfg
        .delays
        .iter()
        .map(|&d| {
            let k = (d / slot).round();
            if d < 0.0 || (k * slot - d).abs() > 1e-6 * slot {
                Err(Error::Sim(format!("delay {d:e} s is not a multiple of the {slot:e} s identity slot")))
            } else {
                Ok(k as usize)
            }
        })
        .collect::<Result<_>>()?;

    let rx = timed_layer(Vec::new(), &[Gate::rx90(1)], &tables)?;
    let wait = match policy {
        RamseyPolicy::Bare => TimedLayer { frame: Vec::new(), ideal: Vec::new(), drives: Vec::new(), steps: id.steps() },
        RamseyPolicy::SuppressedB => timed_layer(Vec::new(), &[Gate::id(1)], &tables)?,
        RamseyPolicy::SuppressedC => {
            let spectators: Vec<Gate> = (0..n).filter(|&q| q != 1).map(Gate::id).collect();
            timed_layer(Vec::new(), &spectators, &tables)?
        }
    };
    let u_rx = layer_unitary_dense(&rx, device, dt, opts.coupling);
    let u_wait = layer_unitary_dense(&wait, device, dt, opts.coupling);
    let dim = 1usize << n;
    let probe = 1usize << (n - 2);
    let max_slots = slots.iter().copied().max().unwrap_or(0);

    let mut populations = [Vec::new(), Vec::new()];
    for (s, curve) in populations.iter_mut().enumerate() {
        let mut psi = CVector::zeros(dim);
        psi[s << (n - 1)] = C64::new(1.0, 0.0);
        psi = &u_rx * psi;
        let mut by_slots = vec![None; max_slots + 1];
        for (k, entry) in by_slots.iter_mut().enumerate() {
            if slots.contains(&k) {
                *entry = Some(psi.clone());
            }
            if k < max_slots {
                psi = &u_wait * psi;
            }
        }
        for (&k, &delay) in slots.iter().zip(&cfg.delays) {
            let waited = by_slots[k].clone().expect("recorded");
            let frame = quantum::embed(&quantum::rz(2.0 * PI * cfg.detuning_hz * delay), &[1], n);
            let out = &u_rx * (frame * waited);
            curve.push((0..dim).filter(|i| i & probe != 0).map(|i| out[i].norm_sqr()).sum());
        }
    }
    let fits = [fit_cosine(&cfg.delays, &populations[0])?, fit_cosine(&cfg.delays, &populations[1])?];
    Ok(RamseyResult {
        policy,
        delays: cfg.delays.clone(),
        effective_hz: (fits[1].frequency_hz - fits[0].frequency_hz).abs(),
        populations,
        fits,
    })
}

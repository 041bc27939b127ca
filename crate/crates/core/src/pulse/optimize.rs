//! Fourier-envelope pulse optimization on a basic region.
//!
//! Coefficients are optimized in the dimensionless form `x_j = A_j T`, so a
//! channel rotates by `Σ x_j / 2` radians of `∫Ω dt`. The first-order
//! cancellation problem is solved as a nonlinear least-squares system with
//! Levenberg–Marquardt; the fidelity-averaged objective uses BFGS.

use std::f64::consts::PI;

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;
use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    baseline_pulse, dcg_sequence, optctrl_loss, pert_loss, to_ns, toggling_integrals, Axis, Backend, Channel, Envelope,
    NativeGate, PulseMeta, PulseSpec, RegionModel, DEFAULT_DT,
};
use crate::error::{Error, Result};
use crate::quantum::{CMatrix, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    /// Pulse duration in seconds; the backend's gate duration when unset.
    pub duration: Option<f64>,
    /// Integration steps; `duration / 0.1 ns` when unset.
    pub steps: Option<usize>,
    /// Fourier terms per channel.
    pub terms: usize,
    /// Weight of the gate-fidelity term.
    pub w: f64,
    /// Coupling strengths averaged by the fidelity objective, rad/s.
    pub lambda_samples: Vec<f64>,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Convergence threshold: residual norm for the cancellation problem,
    /// gradient norm for the fidelity objective.
    pub tolerance: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            duration: None,
            steps: None,
            terms: 5,
            w: 1.0,
            lambda_samples: [50e3, 100e3, 200e3, 400e3].iter().map(|f| 2.0 * PI * f).collect(),
            max_iters: 400,
            restarts: 3,
            seed: 0,
            tolerance: 1e-12,
        }
    }
}

/// Control channels of a Fourier pulse: `x`/`y` drives on each gate qubit
/// and, for two qubits, the coupling.
pub fn channel_layout(gate_qubits: usize) -> Vec<(Vec<usize>, Axis)> {
    let mut out: Vec<(Vec<usize>, Axis)> =
        (0..gate_qubits).flat_map(|q| [(vec![q], Axis::X), (vec![q], Axis::Y)]).collect();
    if gate_qubits == 2 {
        out.push((vec![0, 1], Axis::Coupling));
    }
    out
}

/// Builds a Fourier pulse from dimensionless coefficients, `terms` per channel
/// in [`channel_layout`] order.
pub fn fourier_pulse(gate: NativeGate, backend: Backend, duration: f64, steps: usize, x: &[f64], terms: usize) -> PulseSpec {
    let channels = channel_layout(gate.num_qubits())
        .into_iter()
        .zip(x.chunks(terms))
        .map(|((target, axis), chunk)| Channel {
            target,
            axis,
            envelope: Envelope::Fourier { fourier_a: chunk.iter().map(|v| v / duration).collect() },
        })
        .collect();
    PulseSpec {
        target_gate: Some(gate),
        backend,
        t_ns: to_ns(duration),
        steps,
        channels,
        meta: PulseMeta::default(),
    }
}

/// Initial coefficients: a raised cosine of the right area on the driving
/// channel plus Gaussian noise of `spread` radians on every coefficient.
fn initial_guess(gate: NativeGate, terms: usize, spread: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let layout = channel_layout(gate.num_qubits());
    let normal = Normal::new(0.0, spread).expect("finite spread");
    let mut x: Vec<f64> = (0..layout.len() * terms).map(|_| normal.sample(rng)).collect();
    let drive = match gate.drive_axis() {
        Axis::Coupling => layout.len() - 1,
        _ => 0,
    };
    x[drive * terms] += gate.rotation();
    x
}

/// Central finite-difference gradient with step `1e-6 max(|x_i|, 1)`.
pub fn central_gradient<F>(f: &F, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            let mut p = x.to_vec();
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            (up - f(&p)) / (2.0 * h)
        })
        .collect()
}

/// Fourth-order (Richardson-extrapolated) finite-difference gradient.
pub fn richardson_gradient<F>(f: &F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let at = |d: f64| {
                let mut p = x.to_vec();
                p[i] += d;
                f(&p)
            };
            (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
        })
        .collect()
}

/// Outcome of a local solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Levenberg–Marquardt on `r(x)`, minimizing `‖r‖²/2`. The Jacobian is a
/// central finite difference evaluated in parallel over columns.
pub fn levenberg_marquardt<F>(r: &F, x0: &[f64], max_iters: usize, tol: f64) -> Solution
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let half_sq = |v: &[f64]| 0.5 * v.iter().map(|a| a * a).sum::<f64>();
    let mut x = x0.to_vec();
    let mut res = r(&x);
    let mut cost = half_sq(&res);
    let mut mu = -1.0;
    let mut nu = 2.0;
    let mut iterations = 0;
    while iterations < max_iters && (2.0 * cost).sqrt() > tol {
        iterations += 1;
        let cols: Vec<Vec<f64>> = (0..x.len())
            .into_par_iter()
            .map(|i| {
                let h = 1e-6 * x[i].abs().max(1.0);
                let mut p = x.clone();
                p[i] = x[i] + h;
                let up = r(&p);
                p[i] = x[i] - h;
                let down = r(&p);
                up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h)).collect()
            })
            .collect();
        let jac = DMatrix::from_fn(res.len(), x.len(), |row, col| cols[col][row]);
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&res);
        if mu < 0.0 {
            mu = 1e-3 * a.diagonal().max().max(1e-12);
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = a.clone();
            for i in 0..x.len() {
                damped[(i, i)] += mu * a[(i, i)].max(1e-9);
            }
            let Some(chol) = damped.cholesky() else {
                mu *= nu;
                nu *= 2.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial_res = r(&trial);
            let trial_cost = half_sq(&trial_res);
            let predicted = -step.dot(&g) - 0.5 * step.dot(&(&a * &step));
            if trial_cost.is_finite() && trial_cost < cost {
                let rho = (cost - trial_cost) / predicted.max(f64::MIN_POSITIVE);
                mu *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                let small = step.norm() <= 1e-15 * (DVector::from_column_slice(&x).norm() + 1e-15);
                x = trial;
                res = trial_res;
                cost = trial_cost;
                accepted = true;
                if small {
                    return Solution { x, cost, iterations, converged: (2.0 * cost).sqrt() <= tol };
                }
                break;
            }
            mu *= nu;
            nu *= 2.0;
        }
        if !accepted {
            break;
        }
    }
    Solution { converged: (2.0 * cost).sqrt() <= tol, x, cost, iterations }
}

struct FdProblem<F> {
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> CostFunction for FdProblem<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok((self.f)(x))
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Gradient for FdProblem<F> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(central_gradient(&self.f, x))
    }
}

/// BFGS with a Moré–Thuente line search and finite-difference gradients.
pub fn bfgs<F>(f: F, x0: &[f64], max_iters: usize, tol: f64) -> Solution
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let start_cost = f(x0);
    if max_iters == 0 {
        return Solution { x: x0.to_vec(), cost: start_cost, iterations: 0, converged: false };
    }
    let n = x0.len();
    let identity: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let solver = BFGS::new(MoreThuenteLineSearch::new()).with_tolerance_grad(tol.max(1e-8)).and_then(|s| s.with_tolerance_cost(1e-14));
    let solver = match solver {
        Ok(s) => s,
        Err(e) => {
            warn!("bfgs setup failed: {e}");
            return Solution { x: x0.to_vec(), cost: start_cost, iterations: 0, converged: false };
        }
    };
    let run = Executor::new(FdProblem { f: &f }, solver)
        .configure(|s| s.param(x0.to_vec()).inv_hessian(identity).max_iters(max_iters as u64))
        .timer(false)
        .run();
    match run {
        Ok(res) => {
            let state = res.state();
            let x = state.get_best_param().cloned().unwrap_or_else(|| x0.to_vec());
            let cost = state.get_best_cost();
            let g = central_gradient(&f, &x);
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            Solution { x, cost, iterations: state.get_iter() as usize, converged: gnorm <= tol.max(1e-8) }
        }
        Err(e) => {
            warn!("bfgs stopped early: {e}");
            Solution { x: x0.to_vec(), cost: start_cost, iterations: 0, converged: false }
        }
    }
}

/// Residuals whose squared norm is `‖U_ctrl - e^{iφ}U‖² + Σ_g ‖K_g / T‖²`,
/// where `K_g` is the toggling-frame integral of `σ_z` on each gate qubit
/// that has a neighbour.
fn cancellation_residuals(model: &RegionModel, pulse: &PulseSpec, target: &CMatrix, w: f64) -> Vec<f64> {
    let (u, k_int) = toggling_integrals(pulse, model.gate_qubits, model.coupling);
    let tr = (target.adjoint() * &u).trace();
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { C64::new(1.0, 0.0) };
    let scale = w.max(0.0).sqrt();
    let mut out = Vec::new();
    for z in (&u - target * phase).iter() {
        out.push(scale * z.re);
        out.push(scale * z.im);
    }
    let duration = pulse.duration();
    for (g, k) in k_int.iter().enumerate() {
        if model.neighbors.iter().flatten().any(|&(q, l)| q == g && l > 0.0) {
            for z in k.iter() {
                out.push(z.re / duration);
                out.push(z.im / duration);
            }
        }
    }
    out
}

/// Coupled neighbours on every gate qubit, for models built without any.
fn cancellation_model(model: &RegionModel) -> RegionModel {
    let mut m = model.clone();
    for g in 0..m.gate_qubits {
        if !m.neighbors.iter().flatten().any(|&(q, l)| q == g && l > 0.0) {
            m.neighbors.push(vec![(g, 1.0)]);
        }
    }
    m
}

/// Designs a pulse for `gate` on `model` with the given backend. Gaussian and
/// composite pulses are returned directly. Fourier backends run
/// `cfg.restarts` seeded local solves and keep the lowest loss; a run that
/// misses the tolerance is returned with `meta.converged = false`.
pub fn optimize(model: &RegionModel, gate: NativeGate, backend: Backend, cfg: &OptimizeConfig) -> Result<PulseSpec> {
    if model.gate_qubits != gate.num_qubits() {
        return Err(Error::Pulse(format!("{gate} needs a region with {} gate qubits", gate.num_qubits())));
    }
    match backend {
        Backend::Gaussian => return Ok(baseline_pulse(gate)),
        Backend::Dcg => return dcg_sequence(gate),
        _ => {}
    }
    if cfg.terms == 0 || cfg.restarts == 0 {
        return Err(Error::Pulse("need at least one Fourier term and one restart".into()));
    }
    let duration = cfg.duration.unwrap_or_else(|| backend.duration(gate));
    let steps = cfg.steps.unwrap_or_else(|| ((duration / DEFAULT_DT).round() as usize).max(1));
    let target = gate.target();
    let build = |x: &[f64]| fourier_pulse(gate, backend, duration, steps, x, cfg.terms);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<Vec<f64>> = (0..cfg.restarts)
        .map(|r| initial_guess(gate, cfg.terms, if r == 0 { 0.3 } else { 1.0 }, &mut rng))
        .collect();

    // The cancellation conditions do not depend on the coupling strengths,
    // only on which gate qubits have neighbours.
    let pert_model = cancellation_model(model);
    let solve = |x0: &[f64]| -> Solution {
        match backend {
            Backend::Pert => {
                let r = |x: &[f64]| cancellation_residuals(&pert_model, &build(x), &target, cfg.w);
                levenberg_marquardt(&r, x0, cfg.max_iters, cfg.tolerance)
            }
            _ => {
                let f = |x: &[f64]| {
                    optctrl_loss(model, &build(x), &target, cfg.w, &cfg.lambda_samples).unwrap_or(f64::INFINITY)
                };
                bfgs(f, x0, cfg.max_iters, cfg.tolerance)
            }
        }
    };

    if cfg.max_iters == 0 {
        let mut pulse = build(&starts[0]);
        pulse.meta = PulseMeta { loss: None, iterations: 0, converged: false };
        return Ok(pulse);
    }
    let mut best: Option<Solution> = None;
    for (r, x0) in starts.iter().enumerate() {
        let sol = solve(x0);
        debug!("{gate} {backend} restart {r}: cost {:e} after {} iterations", sol.cost, sol.iterations);
        if best.as_ref().is_none_or(|b| sol.cost < b.cost) {
            best = Some(sol);
        }
        if best.as_ref().is_some_and(|b| b.converged && backend == Backend::Pert) {
            break;
        }
    }
    let best = best.expect("at least one restart");
    let mut pulse = build(&best.x);
    let loss = match backend {
        Backend::Pert => pert_loss(&pert_model, &pulse, &target, cfg.w)?,
        _ => optctrl_loss(model, &pulse, &target, cfg.w, &cfg.lambda_samples)?,
    };
    if !best.converged {
        warn!("{gate} {backend} pulse did not converge (final cost {:e})", best.cost);
    }
    pulse.meta = PulseMeta { loss: Some(loss), iterations: best.iterations, converged: best.converged };
    Ok(pulse)
}

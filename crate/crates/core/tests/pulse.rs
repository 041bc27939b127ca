use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zzsched::pulse::optimize::{central_gradient, fourier_pulse, richardson_gradient};
use zzsched::pulse::*;
use zzsched::quantum::{self, frobenius};

fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn finite_difference_gradients_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let target = NativeGate::Rx90.target();
    let model = RegionModel::for_gate(NativeGate::Rx90, 2, hz(200e3));
    let loss = |x: &[f64]| {
        let p = fourier_pulse(NativeGate::Rx90, Backend::Pert, 20e-9, 200, x, 5);
        pert_loss(&model, &p, &target, 1.0).unwrap()
    };
    for _ in 0..5 {
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
        let a = central_gradient(&loss, &x);
        let b = richardson_gradient(&loss, &x, 1e-3);
        let diff: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&diff) <= 0.01 * norm(&b), "{a:?} vs {b:?}");
    }
}

#[test]
fn region_evolution_converges_with_step_refinement() {
    let model = RegionModel::for_gate(NativeGate::Rx90, 2, hz(200e3));
    let x = [PI / 2.0, 0.3, -0.2, 0.1, 0.05, 0.2, -0.1, 0.0, 0.1, -0.3];
    let fidelity = |steps: usize| {
        let p = fourier_pulse(NativeGate::Rx90, Backend::Pert, 20e-9, steps, &x, 5);
        1.0 - region_infidelity(&model, &p, &NativeGate::Rx90.target(), DriveNoise::default()).unwrap()
    };
    assert!((fidelity(200) - fidelity(400)).abs() < 1e-6);
    let zx = baseline_pulse(NativeGate::Rzx90);
    let two = RegionModel::for_gate(NativeGate::Rzx90, 1, hz(200e3));
    let coarse = region_infidelity(&two, &zx, &NativeGate::Rzx90.target(), DriveNoise::default()).unwrap();
    let fine = region_infidelity(&two, &PulseSpec { steps: 2 * zx.steps, ..zx.clone() }, &NativeGate::Rzx90.target(), DriveNoise::default()).unwrap();
    assert!((coarse - fine).abs() < 1e-6);
}

#[test]
fn optimized_single_qubit_gate_without_neighbours() {
    let model = RegionModel::for_gate(NativeGate::Rx90, 0, 0.0);
    let p = optimize(&model, NativeGate::Rx90, Backend::Pert, &OptimizeConfig::default()).unwrap();
    let u = control_unitary(&p, 1, CouplingForm::Zx);
    assert!(avg_gate_fidelity(&NativeGate::Rx90.target(), &u).unwrap() >= 1.0 - 1e-4);
    assert!(p.meta.converged);
}

#[test]
fn cancellation_pulses_null_the_first_order_term() {
    for (gate, m) in [(NativeGate::Rx90, 1), (NativeGate::Rx90, 2), (NativeGate::Id, 2)] {
        let model = RegionModel::for_gate(gate, m, hz(200e3));
        let p = optimize(&model, gate, Backend::Pert, &OptimizeConfig::default()).unwrap();
        let idle = PulseSpec { channels: vec![], ..p.clone() };
        let bare = frobenius(&pert_first_order(&model, &idle).unwrap());
        assert!(frobenius(&pert_first_order(&model, &p).unwrap()) <= 1e-3 * bare, "{gate} with {m} neighbours");
        assert!(unitarity_error(&evolve(&model, &p).unwrap()) < 1e-10);
    }
}

#[test]
fn optimized_pulse_beats_the_gaussian_on_the_cancellation_loss() {
    let target = NativeGate::Rx90.target();
    let model = RegionModel::for_gate(NativeGate::Rx90, 2, hz(200e3));
    let p = optimize(&model, NativeGate::Rx90, Backend::Pert, &OptimizeConfig::default()).unwrap();
    let gauss = pert_loss(&model, &baseline_pulse(NativeGate::Rx90), &target, 1.0).unwrap();
    assert!(gauss > pert_loss(&model, &p, &target, 1.0).unwrap());
}

#[test]
fn identity_pulse_suppresses_weak_coupling() {
    let model = RegionModel::for_gate(NativeGate::Id, 1, hz(50e3));
    let target = NativeGate::Id.target();
    let p = optimize(&model, NativeGate::Id, Backend::Pert, &OptimizeConfig::default()).unwrap();
    let ours = region_infidelity(&model, &p, &target, DriveNoise::default()).unwrap();
    let gauss = region_infidelity(&model, &baseline_pulse(NativeGate::Id), &target, DriveNoise::default()).unwrap();
    assert!(10.0 * ours <= gauss, "{ours:e} vs {gauss:e}");
}

#[test]
fn fidelity_objective_reduces_crosstalk() {
    let model = RegionModel::for_gate(NativeGate::Rx90, 1, hz(200e3));
    let cfg = OptimizeConfig { max_iters: 60, restarts: 1, ..OptimizeConfig::default() };
    let p = optimize(&model, NativeGate::Rx90, Backend::Optctrl, &cfg).unwrap();
    assert_eq!(p.backend, Backend::Optctrl);
    let target = NativeGate::Rx90.target();
    let ours = region_infidelity(&model, &p, &target, DriveNoise::default()).unwrap();
    let gauss = region_infidelity(&model, &baseline_pulse(NativeGate::Rx90), &target, DriveNoise::default()).unwrap();
    assert!(ours < gauss, "{ours:e} vs {gauss:e}");
    assert!(p.meta.loss.unwrap() < 1.0);
}

#[test]
fn zero_iteration_cap_returns_the_initial_pulse() {
    let model = RegionModel::for_gate(NativeGate::Rx90, 1, hz(200e3));
    for backend in [Backend::Pert, Backend::Optctrl] {
        let cfg = OptimizeConfig { max_iters: 0, ..OptimizeConfig::default() };
        let p = optimize(&model, NativeGate::Rx90, backend, &cfg).unwrap();
        assert_eq!(p.meta, PulseMeta { loss: None, iterations: 0, converged: false });
        assert_eq!(p, optimize(&model, NativeGate::Rx90, backend, &cfg).unwrap());
        // The starting guess is a perturbed raised cosine of the right area.
        let Envelope::Fourier { fourier_a } = &p.channels[0].envelope else { panic!("fourier envelope") };
        let area: f64 = fourier_a.iter().sum::<f64>() * p.duration();
        assert!((area - PI / 2.0).abs() < 2.0);
    }
}

#[test]
fn optimization_is_deterministic() {
    let model = RegionModel::for_gate(NativeGate::Rzx90, 1, hz(200e3));
    let cfg = OptimizeConfig { max_iters: 5, restarts: 2, seed: 9, ..OptimizeConfig::default() };
    let a = optimize(&model, NativeGate::Rzx90, Backend::Pert, &cfg).unwrap();
    let b = optimize(&model, NativeGate::Rzx90, Backend::Pert, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let other = optimize(&model, NativeGate::Rzx90, Backend::Pert, &OptimizeConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a, other);
}

#[test]
fn drive_imperfections() {
    let model = RegionModel::for_gate(NativeGate::Rx90, 1, hz(100e3));
    let target = NativeGate::Rx90.target();
    let p = optimize(&model, NativeGate::Rx90, Backend::Pert, &OptimizeConfig::default()).unwrap();
    let at = |noise: DriveNoise, lambda: f64| {
        region_infidelity(&model.with_uniform_lambda(lambda), &p, &target, noise).unwrap().max(1e-8)
    };
    let clean = at(DriveNoise::default(), hz(100e3));
    let detuned = DriveNoise { detuning_hz: 0.1e6, amplitude_scale: 1.0 };
    assert!(at(detuned, hz(100e3)) <= 10.0 * clean);

    // A 0.1% amplitude error mis-rotates every pulse by the same amount, so
    // only the coupling-dependent part is compared.
    let loud = DriveNoise { detuning_hz: 0.0, amplitude_scale: 1.001 };
    let floor = at(loud, 0.0);
    assert!(floor > 10.0 * clean && floor < 1e-6);
    assert!(at(loud, hz(100e3)) <= floor + 10.0 * clean);
    let gauss = region_infidelity(&model, &baseline_pulse(NativeGate::Rx90), &target, loud).unwrap();
    assert!(gauss > 10.0 * at(loud, hz(100e3)));
}

#[test]
fn composite_pulse_is_an_exact_gate() {
    for gate in [NativeGate::Rx90, NativeGate::Id] {
        let p = dcg_sequence(gate).unwrap();
        p.validate().unwrap();
        let u = control_unitary(&p, 1, CouplingForm::Zx);
        assert!(quantum::equal_up_to_phase(&u, &gate.target(), 1e-5));
    }
    assert!(dcg_sequence(NativeGate::Rzx90).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn region_evolution_is_unitary(
        x in prop::collection::vec(-3.0f64..3.0, 10),
        lambda_khz in 0.0f64..500.0,
        m in 0usize..3,
    ) {
        let model = RegionModel::for_gate(NativeGate::Rx90, m, hz(lambda_khz * 1e3));
        let p = fourier_pulse(NativeGate::Rx90, Backend::Pert, 20e-9, 200, &x, 5);
        prop_assert!(unitarity_error(&evolve(&model, &p).unwrap()) < 1e-10);
        let f = avg_gate_fidelity(&NativeGate::Rx90.target(), &control_unitary(&p, 1, CouplingForm::Zx)).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn pulse_files_round_trip(x in prop::collection::vec(-3.0f64..3.0, 25)) {
        let p = fourier_pulse(NativeGate::Rzx90, Backend::Optctrl, 80e-9, 800, &x, 5);
        let back: PulseSpec = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }
}

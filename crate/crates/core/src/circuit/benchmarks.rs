//! Seeded benchmark circuits on a linear chain `0 - 1 - ... - (n-1)`.
//!
//! Every two-qubit gate acts on chain neighbours, so a circuit runs unchanged
//! on any device containing a Hamiltonian path (see
//! [`crate::topology::snake_layout`] for grids).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Circuit, Gate};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Benchmark {
    Qft,
    Hs,
    Qpe,
    Qaoa,
    Ising,
    Grc,
}

impl Benchmark {
    pub const ALL: [Benchmark; 6] =
        [Benchmark::Qft, Benchmark::Hs, Benchmark::Qpe, Benchmark::Qaoa, Benchmark::Ising, Benchmark::Grc];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Qft => "qft",
            Benchmark::Hs => "hs",
            Benchmark::Qpe => "qpe",
            Benchmark::Qaoa => "qaoa",
            Benchmark::Ising => "ising",
            Benchmark::Grc => "grc",
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Circuit(format!("unknown benchmark '{s}'")))
    }
}

/// Builds benchmark `kind` on `n` qubits (2..=12), deterministic in `seed`.
pub fn benchmark(kind: Benchmark, n: usize, seed: u64) -> Result<Circuit> {
    if !(2..=12).contains(&n) {
        return Err(Error::Circuit(format!("benchmarks support 2 to 12 qubits, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gates = match kind {
        Benchmark::Qft => qft_network(&(0..n).collect::<Vec<_>>()),
        Benchmark::Hs => hidden_shift(n, &mut rng),
        Benchmark::Qpe => phase_estimation(n, &mut rng),
        Benchmark::Qaoa => qaoa(n, &mut rng),
        Benchmark::Ising => ising(n, &mut rng),
        Benchmark::Grc => random_circuit(n, &mut rng),
    };
    Circuit::new(n, gates)
}

fn named(name: &str, params: Vec<f64>, qubits: Vec<usize>) -> Gate {
    Gate::named(name, params, qubits)
}

fn h(q: usize) -> Gate {
    named("h", vec![], vec![q])
}

/// Fourier transform on the chain `pos`. Round `i` applies H to the qubit at
/// the head of the chain and carries it to the tail, interleaving controlled
/// phases with swaps so every interaction is between neighbours.
fn qft_network(pos: &[usize]) -> Vec<Gate> {
    let n = pos.len();
    let mut gates = Vec::new();
    for i in 0..n {
        gates.push(h(pos[0]));
        for j in 1..n - i {
            gates.push(named("cp", vec![PI / f64::from(1u32 << j)], vec![pos[j - 1], pos[j]]));
            gates.push(named("swap", vec![], vec![pos[j - 1], pos[j]]));
        }
    }
    gates
}

fn inverse(gates: &[Gate]) -> Vec<Gate> {
    gates
        .iter()
        .rev()
        .map(|g| match g.name() {
            "cp" => named("cp", vec![-g.params()[0]], g.qubits.clone()),
            _ => g.clone(),
        })
        .collect()
}

/// Hidden shift for the inner-product bent function on pairs `(2i, 2i+1)`.
/// The ideal output is the computational basis state of the shift.
fn hidden_shift(n: usize, rng: &mut ChaCha8Rng) -> Vec<Gate> {
    let paired = n - n % 2;
    let shift: Vec<bool> = (0..paired).map(|_| rng.random_bool(0.5)).collect();
    let mut gates = Vec::new();
    let hadamards = |gates: &mut Vec<Gate>| gates.extend((0..paired).map(h));
    let oracle = |gates: &mut Vec<Gate>| {
        gates.extend((0..paired / 2).map(|i| named("cz", vec![], vec![2 * i, 2 * i + 1])))
    };
    hadamards(&mut gates);
    gates.extend((0..paired).filter(|&q| shift[q]).map(|q| named("x", vec![], vec![q])));
    oracle(&mut gates);
    gates.extend((0..paired).filter(|&q| shift[q]).map(|q| named("x", vec![], vec![q])));
    hadamards(&mut gates);
    oracle(&mut gates);
    hadamards(&mut gates);
    gates
}

/// Phase estimation of `diag(1, e^{2πiφ})` with `n - 1` counting qubits and an
/// exactly representable φ. The target starts at the tail of the chain and
/// walks to the head, meeting each counting qubit once.
fn phase_estimation(n: usize, rng: &mut ChaCha8Rng) -> Vec<Gate> {
    let m = n - 1;
    let phi = rng.random_range(1..1u32 << m) as f64 / f64::from(1u32 << m);
    let mut gates = vec![named("x", vec![], vec![n - 1])];
    gates.extend((0..m).map(h));
    for k in (0..m).rev() {
        let power = f64::from(1u32 << (m - 1 - k));
        gates.push(named("cp", vec![2.0 * PI * phi * power], vec![k, k + 1]));
        gates.push(named("swap", vec![], vec![k, k + 1]));
    }
    let counting: Vec<usize> = (1..n).collect();
    gates.extend(inverse(&qft_network(&counting)));
    gates
}

/// Depth-one QAOA for MaxCut on the chain's own edges.
fn qaoa(n: usize, rng: &mut ChaCha8Rng) -> Vec<Gate> {
    let gamma = rng.random_range(0.1..PI);
    let beta = rng.random_range(0.1..PI / 2.0);
    let mut gates: Vec<Gate> = (0..n).map(h).collect();
    for parity in [0, 1] {
        for a in (parity..n - 1).step_by(2) {
            zz_phase(&mut gates, a, a + 1, 2.0 * gamma);
        }
    }
    gates.extend((0..n).map(|q| named("rx", vec![2.0 * beta], vec![q])));
    gates
}

fn zz_phase(gates: &mut Vec<Gate>, a: usize, b: usize, theta: f64) {
    gates.push(named("cx", vec![], vec![a, b]));
    gates.push(named("rz", vec![theta], vec![b]));
    gates.push(named("cx", vec![], vec![a, b]));
}

/// Two first-order Trotter steps of a transverse-field Ising chain with
/// random couplings and fields.
fn ising(n: usize, rng: &mut ChaCha8Rng) -> Vec<Gate> {
    let dt = 0.25;
    let couplings: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.5..1.5)).collect();
    let fields: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut gates: Vec<Gate> = (0..n).map(h).collect();
    for _ in 0..2 {
        for parity in [0, 1] {
            for a in (parity..n - 1).step_by(2) {
                zz_phase(&mut gates, a, a + 1, 2.0 * couplings[a] * dt);
            }
        }
        gates.extend((0..n).map(|q| named("rx", vec![2.0 * fields[q] * dt], vec![q])));
    }
    gates
}

/// Random-circuit sampling style: four cycles of random single-qubit gates
/// from `{√X, √Y, T}` (never repeating on a qubit) followed by CZ on
/// alternating chain edges.
fn random_circuit(n: usize, rng: &mut ChaCha8Rng) -> Vec<Gate> {
    let mut gates: Vec<Gate> = (0..n).map(h).collect();
    let mut last = vec![usize::MAX; n];
    for cycle in 0..4 {
        for (q, prev) in last.iter_mut().enumerate() {
            let mut pick = rng.random_range(0..3);
            if pick == *prev {
                pick = (pick + 1 + rng.random_range(0..2)) % 3;
            }
            *prev = pick;
            gates.push(match pick {
                0 => named("rx", vec![PI / 2.0], vec![q]),
                1 => named("ry", vec![PI / 2.0], vec![q]),
                _ => named("t", vec![], vec![q]),
            });
        }
        for a in (cycle % 2..n - 1).step_by(2) {
            gates.push(named("cz", vec![], vec![a, a + 1]));
        }
    }
    gates
}

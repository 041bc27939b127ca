//! Dense complex linear algebra for small quantum systems.
//!
//! Qubit 0 is the most significant bit of a basis index, so `kron(a, b)` acts
//! with `a` on qubit 0 and `b` on qubit 1.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn mat2(a: C64, b: C64, cc: C64, d: C64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[a, b, cc, d])
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    mat2(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> CMatrix {
    mat2(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> CMatrix {
    mat2(ONE, ZERO, ZERO, -ONE)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors
        .iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

/// `exp(-i θ/2 σ_x)`.
pub fn rx(theta: f64) -> CMatrix {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    mat2(c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0))
}

/// `exp(-i θ/2 σ_y)`.
pub fn ry(theta: f64) -> CMatrix {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    mat2(c(co, 0.0), c(-si, 0.0), c(si, 0.0), c(co, 0.0))
}

/// `exp(-i θ/2 σ_z)`.
pub fn rz(theta: f64) -> CMatrix {
    mat2(C64::from_polar(1.0, -theta / 2.0), ZERO, ZERO, C64::from_polar(1.0, theta / 2.0))
}

pub fn hadamard() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    mat2(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0))
}

pub fn phase(theta: f64) -> CMatrix {
    mat2(ONE, ZERO, ZERO, C64::from_polar(1.0, theta))
}

/// `exp(-i θ/2 σ_z ⊗ σ_x)`, σ_z on the first qubit.
pub fn rzx(theta: f64) -> CMatrix {
    let zx = kron(&pauli_z(), &pauli_x());
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    identity(4) * c(co, 0.0) - zx * c(0.0, si)
}

pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

pub fn cz() -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, ONE, -ONE]))
}

pub fn cphase(theta: f64) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, ONE, C64::from_polar(1.0, theta)]))
}

pub fn swap() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// Embeds a one- or two-qubit operator acting on `targets` (in that order)
/// into an `n`-qubit space.
pub fn embed(op: &CMatrix, targets: &[usize], n: usize) -> CMatrix {
    let dim = 1usize << n;
    let k = targets.len();
    assert_eq!(op.nrows(), 1 << k);
    let mut out = CMatrix::zeros(dim, dim);
    let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
    for col in 0..dim {
        let mut sub_col = 0;
        for &t in targets {
            sub_col = (sub_col << 1) | bit(col, t);
        }
        for sub_row in 0..(1 << k) {
            let amp = op[(sub_row, sub_col)];
            if amp == ZERO {
                continue;
            }
            let mut row = col;
            for (j, &t) in targets.iter().enumerate() {
                let b = (sub_row >> (k - 1 - j)) & 1;
                let mask = 1 << (n - 1 - t);
                row = if b == 1 { row | mask } else { row & !mask };
            }
            out[(row, col)] += amp;
        }
    }
    out
}

/// `|Tr(A† B)|`.
pub fn trace_overlap(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut tr = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            tr += a[(j, i)].conj() * b[(j, i)];
        }
    }
    tr.norm()
}

/// Average gate fidelity of `actual` against `target`,
/// `(|Tr(U†V)|² + d) / (d (d + 1))`. Insensitive to global phase.
pub fn gate_fidelity(target: &CMatrix, actual: &CMatrix) -> f64 {
    let d = target.nrows() as f64;
    let t = trace_overlap(target, actual);
    (t * t + d) / (d * (d + 1.0))
}

/// True when `a = e^{iφ} b` for some φ, to tolerance `tol` in every entry.
pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    let Some((idx, _)) = b.iter().enumerate().max_by(|x, y| x.1.norm().total_cmp(&y.1.norm())) else {
        return true;
    };
    let (bi, ai) = (b.as_slice()[idx], a.as_slice()[idx]);
    if bi.norm() < 1e-12 || ai.norm() < 1e-12 {
        return false;
    }
    let ph = ai / bi;
    let ph = ph / ph.norm();
    (a - b * ph).iter().all(|z| z.norm() < tol)
}

/// Frobenius norm.
pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Closed-form `exp(-i H dt)` for a Hermitian 2x2 `H`.
pub fn expm_hermitian_2x2(h: &CMatrix, dt: f64) -> CMatrix {
    let a0 = (h[(0, 0)] + h[(1, 1)]).re / 2.0;
    let az = (h[(0, 0)] - h[(1, 1)]).re / 2.0;
    let ax = h[(0, 1)].re;
    let ay = -h[(0, 1)].im;
    let norm = (ax * ax + ay * ay + az * az).sqrt();
    let theta = norm * dt;
    let (co, si) = (theta.cos(), theta.sin());
    let (nx, ny, nz) = if norm > 0.0 { (ax / norm, ay / norm, az / norm) } else { (0.0, 0.0, 0.0) };
    let global = C64::from_polar(1.0, -a0 * dt);
    mat2(
        c(co, -si * nz) * global,
        c(-si * ny, -si * nx) * global,
        c(si * ny, -si * nx) * global,
        c(co, si * nz) * global,
    )
}

/// `exp(-i H dt)` for a Hermitian `H` by eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, dt: f64) -> CMatrix {
    if h.nrows() == 2 {
        return expm_hermitian_2x2(h, dt);
    }
    let eig = h.clone().symmetric_eigen();
    let phases = eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * dt));
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &CMatrix, b: &CMatrix) -> bool {
        (a - b).iter().all(|z| z.norm() < 1e-10)
    }

    #[test]
    fn rotations_match_their_generators() {
        let th = 0.731;
        for (r, p) in [(rx(th), pauli_x()), (ry(th), pauli_y()), (rz(th), pauli_z())] {
            let h = p * c(0.5, 0.0);
            assert!(close(&r, &expm_hermitian(&(h.clone() * c(th, 0.0)), 1.0)));
            assert!(close(&r, &(h * c(0.0, -th)).exp()));
        }
        let zx = kron(&pauli_z(), &pauli_x()) * c(0.5, 0.0);
        assert!(close(&rzx(th), &expm_hermitian(&zx, th)));
    }

    #[test]
    fn embedding_orders_qubits_big_endian() {
        let x0 = embed(&pauli_x(), &[0], 2);
        assert!(close(&x0, &kron(&pauli_x(), &identity(2))));
        let cx10 = embed(&cnot(), &[1, 0], 2);
        let h2 = kron(&hadamard(), &hadamard());
        assert!(close(&cx10, &(&h2 * cnot() * &h2)));
        let three = embed(&cz(), &[0, 2], 3);
        let expected = kron_all(&[identity(2), identity(2), identity(2)]);
        assert_eq!(three.nrows(), expected.nrows());
        assert!((three[(5, 5)] - (-ONE)).norm() < 1e-12);
        assert!((three[(7, 7)] - (-ONE)).norm() < 1e-12);
        assert!((three[(6, 6)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn fidelity_and_phase_equivalence() {
        let u = hadamard();
        let v = &u * C64::from_polar(1.0, 0.4);
        assert!((gate_fidelity(&u, &v) - 1.0).abs() < 1e-12);
        assert!(equal_up_to_phase(&u, &v, 1e-12));
        assert!(!equal_up_to_phase(&u, &pauli_x(), 1e-6));
        let f = gate_fidelity(&identity(2), &pauli_x());
        assert!((f - 1.0 / 3.0).abs() < 1e-12);
        assert!(equal_up_to_phase(&rx(PI), &pauli_x(), 1e-12));
    }
}

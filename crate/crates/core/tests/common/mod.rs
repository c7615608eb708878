//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the library's own formulas for the quantities it
//! checks: closed forms are written out by hand and expectations are
//! computed by different algorithms.

#![allow(dead_code)]

use hybridsim_core::model::{ClassicalPoint, HybridState};
use hybridsim_core::quantum::{HermitianOperator, QuantumState};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, d: usize) -> DVector<Complex64> {
    DVector::from_fn(d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_state(rng: &mut ChaCha8Rng, d: usize) -> QuantumState<f64> {
    QuantumState::normalize(random_vector(rng, d)).unwrap()
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> HermitianOperator<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    HermitianOperator::new((&a + a.adjoint()) * Complex64::new(0.5, 0.0)).unwrap()
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Initial state used by the long-time reference-model runs.
pub fn reference_initial() -> HybridState<f64> {
    let w = [(0.6, 0.1), (0.3, -0.2), (-0.1, 0.5), (0.2, 0.2)];
    let v = DVector::from_iterator(4, w.iter().map(|&(a, b)| Complex64::new(a, b)));
    HybridState::new(
        ClassicalPoint::one(0.8, -0.3),
        QuantumState::normalize(v).unwrap(),
    )
}

/// Canonical chart `x = sqrt(2) Re c`, `y = sqrt(2) Im c`.
pub fn chart(w: &QuantumState<f64>) -> (Vec<f64>, Vec<f64>) {
    let s = 2f64.sqrt();
    w.amplitudes().iter().map(|c| (s * c.re, s * c.im)).unzip()
}

/// Closed form of `<w| eps(s1z + s2z) + mu s1x s2x |w>` in the canonical chart
/// (basis `|00>, |01>, |10>, |11>`).
pub fn closed_form_spin(eps: f64, mu: f64, x: &[f64], y: &[f64]) -> f64 {
    eps * (x[0] * x[0] + y[0] * y[0] - x[3] * x[3] - y[3] * y[3])
        + mu * (y[1] * y[2] + y[0] * y[3] + x[1] * x[2] + x[0] * x[3])
}

/// Closed form of `<w| q (l1 s1z + l2 s2z) |w>` in the canonical chart.
pub fn closed_form_interaction(l1: f64, l2: f64, q: f64, x: &[f64], y: &[f64]) -> f64 {
    let s = |i: usize| x[i] * x[i] + y[i] * y[i];
    l1 * q * (s(0) + s(1) - s(2) - s(3)) / 2.0 + l2 * q * (s(0) - s(1) + s(2) - s(3)) / 2.0
}

fn double_factorial_odd(k: usize) -> f64 {
    // (2k - 1)!!
    (1..=k).map(|i| (2 * i - 1) as f64).product()
}

/// `E[V(q + s Z)]` for `Z ~ N(0, 1)` and `s^2 = variance`: the polynomial is
/// re-expanded around `q` by repeated synthetic division and the shifted
/// coefficients are weighted with the Gaussian moments `(2k-1)!! s^{2k}`.
pub fn gaussian_expectation(coeffs: &[f64], q: f64, variance: f64) -> f64 {
    let mut c = coeffs.to_vec();
    let n = c.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            c[j] += q * c[j + 1];
        }
    }
    c.iter()
        .enumerate()
        .filter(|(k, _)| k % 2 == 0)
        .map(|(k, a)| a * double_factorial_odd(k / 2) * variance.powi((k / 2) as i32))
        .sum()
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, a)| k as f64 * a)
        .collect()
}

/// Reference hybrid Hamilton function of the two-qubit oscillator model,
/// built from the closed forms above.
#[allow(clippy::too_many_arguments)]
pub fn closed_form_hamiltonian(
    eps: f64,
    mu: f64,
    l1: f64,
    l2: f64,
    potential: &[f64],
    (m, omega, hbar): (f64, f64, f64),
    state: &HybridState<f64>,
) -> f64 {
    let (q, p) = (state.classical.q[0], state.classical.p[0]);
    let (x, y) = chart(&state.omega);
    p * p / (2.0 * m)
        + gaussian_expectation(potential, q, hbar / (2.0 * m * omega))
        + closed_form_spin(eps, mu, &x, &y)
        + closed_form_interaction(l1, l2, q, &x, &y)
}

/// Dense fluctuation excess of a composite vector `psi` (index `n d + j`),
/// built from explicit quadrature matrices in an enlarged Fock basis.
pub fn dense_fluctuation_excess(levels: usize, d: usize, psi: &DVector<Complex64>) -> f64 {
    let big = levels + 2;
    let a = DMatrix::from_fn(big, big, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + a.adjoint()) * Complex64::new(r, 0.0);
    let p = (a.adjoint() - &a) * Complex64::new(0.0, r);
    let block = |m: &DMatrix<Complex64>| m.view((0, 0), (levels, levels)).into_owned();
    let id = DMatrix::<Complex64>::identity(d, d);
    let ev = |m: DMatrix<Complex64>| psi.dotc(&(m.kronecker(&id) * psi)).re;
    let (mx, mp) = (ev(block(&x)), ev(block(&p)));
    ev(block(&(&x * &x))) - mx * mx + ev(block(&(&p * &p))) - mp * mp - 1.0
}

/// Classical-only velocity Verlet for `p^2/2m + E[V(q + s Z)]`, one degree of
/// freedom. Returns `(q, p)` after `steps` steps.
pub fn classical_verlet(
    potential: &[f64],
    (m, omega, hbar): (f64, f64, f64),
    q0: f64,
    p0: f64,
    dt: f64,
    steps: usize,
) -> (f64, f64) {
    let dv = derivative(potential);
    let var = hbar / (2.0 * m * omega);
    let force = |q: f64| -gaussian_expectation(&dv, q, var);
    let (mut q, mut p) = (q0, p0);
    for _ in 0..steps {
        p += 0.5 * dt * force(q);
        q += dt * p / m;
        p += 0.5 * dt * force(q);
    }
    (q, p)
}

/// `exp(M)` by scaling and squaring with a truncated Taylor series.
pub fn expm(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let norm = m.iter().map(|z| z.norm()).sum::<f64>();
    let squarings = norm.log2().ceil().max(0.0) as i32 + 4;
    let a = m * Complex64::new(0.5f64.powi(squarings), 0.0);
    let n = m.nrows();
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

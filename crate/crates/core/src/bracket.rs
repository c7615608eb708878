//! Hybrid Poisson bracket on the reduced chart `(q, p, w, w*)`:
//!
//! ```text
//! {f1, f2} = sum_i (df1/dq_i df2/dp_i - df2/dq_i df1/dp_i)
//!          + (1 / i hbar) sum_m (df1/dw_m df2/dw*_m - df2/dw_m df1/dw*_m)
//! ```
//!
//! In the real chart `(x, y) = sqrt(2) (Re w, Im w)` the quantum part reads
//! `(1/hbar) sum_m (df1/dx_m df2/dy_m - df1/dy_m df2/dx_m)`.
//!
//! Brackets of observables of the form `sum_j c_j(q,p) <w|A_j|w>` are in
//! general quartic in `w`, so bracket results are opaque [`StateFunction`]s
//! rather than new [`HybridObservable`]s.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassicalPoint, HybridHamiltonianSpec, HybridState};
use crate::quantum::{HermitianOperator, QuantumState};
use crate::scalar::{cplx, Real, C};

/// Polynomial in the classical phase-space coordinates `(q_1..q_k, p_1..p_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePolynomial<T: Real> {
    dofs: usize,
    // exponents [q_1..q_k, p_1..p_k] -> coefficient
    terms: BTreeMap<Vec<u32>, T>,
}

/// Serialized monomial `coeff * prod q_i^q[i] * prod p_i^p[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial<T> {
    pub coeff: T,
    pub q: Vec<u32>,
    pub p: Vec<u32>,
}

impl<T: Real> PhasePolynomial<T> {
    pub fn zero(dofs: usize) -> Self {
        Self {
            dofs,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dofs: usize, c: T) -> Self {
        let mut s = Self::zero(dofs);
        s.insert(vec![0; 2 * dofs], c);
        s
    }

    /// `c * q^q_pow * p^p_pow`.
    pub fn monomial(c: T, q_pow: &[u32], p_pow: &[u32]) -> Result<Self> {
        if q_pow.len() != p_pow.len() {
            return Err(Error::DimensionMismatch {
                expected: q_pow.len(),
                found: p_pow.len(),
            });
        }
        let mut s = Self::zero(q_pow.len());
        s.insert([q_pow, p_pow].concat(), c);
        Ok(s)
    }

    /// The coordinate `q_i`.
    pub fn q(dofs: usize, i: usize) -> Self {
        let mut e = vec![0; 2 * dofs];
        e[i] = 1;
        let mut s = Self::zero(dofs);
        s.insert(e, T::one());
        s
    }

    /// The momentum `p_i`.
    pub fn p(dofs: usize, i: usize) -> Self {
        let mut e = vec![0; 2 * dofs];
        e[dofs + i] = 1;
        let mut s = Self::zero(dofs);
        s.insert(e, T::one());
        s
    }

    /// Product over degrees of freedom of univariate polynomials in `q_i`.
    pub fn from_q_factors(factors: &[crate::potential::Polynomial<T>]) -> Self {
        let dofs = factors.len();
        let mut out = Self::constant(dofs, T::one());
        for (i, f) in factors.iter().enumerate() {
            let mut g = Self::zero(dofs);
            for (n, &c) in f.coefficients().iter().enumerate() {
                let mut e = vec![0; 2 * dofs];
                e[i] = n as u32;
                g.insert(e, c);
            }
            out = out.mul(&g);
        }
        out
    }

    /// Univariate polynomial in `q_i`.
    pub fn from_q_polynomial(dofs: usize, i: usize, f: &crate::potential::Polynomial<T>) -> Self {
        let mut g = Self::zero(dofs);
        for (n, &c) in f.coefficients().iter().enumerate() {
            let mut e = vec![0; 2 * dofs];
            e[i] = n as u32;
            g.insert(e, c);
        }
        g
    }

    pub fn from_monomials(dofs: usize, monomials: &[Monomial<T>]) -> Result<Self> {
        let mut s = Self::zero(dofs);
        for m in monomials {
            if m.q.len() != dofs || m.p.len() != dofs {
                return Err(Error::DimensionMismatch {
                    expected: dofs,
                    found: m.q.len().max(m.p.len()),
                });
            }
            if !m.coeff.is_finite() {
                return Err(Error::InvalidParameter(
                    "non-finite monomial coefficient".into(),
                ));
            }
            s.insert([m.q.as_slice(), m.p.as_slice()].concat(), m.coeff);
        }
        Ok(s)
    }

    pub fn to_monomials(&self) -> Vec<Monomial<T>> {
        self.terms
            .iter()
            .map(|(e, &c)| Monomial {
                coeff: c,
                q: e[..self.dofs].to_vec(),
                p: e[self.dofs..].to_vec(),
            })
            .collect()
    }

    fn insert(&mut self, exps: Vec<u32>, c: T) {
        let entry = self.terms.entry(exps).or_insert_with(T::zero);
        *entry += c;
        // drop exact cancellations
        self.terms.retain(|_, v| *v != T::zero());
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut s = self.clone();
        for (e, &c) in &other.terms {
            s.insert(e.clone(), c);
        }
        s
    }

    pub fn scale(&self, k: T) -> Self {
        let mut s = Self::zero(self.dofs);
        for (e, &c) in &self.terms {
            s.insert(e.clone(), c * k);
        }
        s
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut s = Self::zero(self.dofs);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                s.insert(e, c1 * c2);
            }
        }
        s
    }

    pub fn eval(&self, q: &[T], p: &[T]) -> T {
        let mut total = T::zero();
        for (e, &c) in &self.terms {
            let mut term = c;
            for (x, &k) in q.iter().chain(p.iter()).zip(e) {
                if k > 0 {
                    term *= x.powi(k as i32);
                }
            }
            total += term;
        }
        total
    }

    fn derivative_var(&self, var: usize) -> Self {
        let mut s = Self::zero(self.dofs);
        for (e, &c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            s.insert(e2, c * T::from_count(e[var] as usize));
        }
        s
    }

    pub fn d_dq(&self, i: usize) -> Self {
        self.derivative_var(i)
    }

    pub fn d_dp(&self, i: usize) -> Self {
        self.derivative_var(self.dofs + i)
    }
}

/// A real function on the reduced chart. Evaluation must also make sense on
/// unnormalized quantum vectors (extended by its defining formula).
pub trait StateFunction<T: Real>: Send + Sync {
    fn eval(&self, state: &HybridState<T>) -> Result<T>;
}

/// Adapts a closure into a [`StateFunction`].
pub struct FnStateFunction<F>(pub F);

impl<T: Real, F> StateFunction<T> for FnStateFunction<F>
where
    F: Fn(&HybridState<T>) -> Result<T> + Send + Sync,
{
    fn eval(&self, state: &HybridState<T>) -> Result<T> {
        (self.0)(state)
    }
}

/// Pointwise product of two state functions.
pub struct ProductFunction<T: Real>(pub Arc<dyn StateFunction<T>>, pub Arc<dyn StateFunction<T>>);

impl<T: Real> StateFunction<T> for ProductFunction<T> {
    fn eval(&self, state: &HybridState<T>) -> Result<T> {
        Ok(self.0.eval(state)? * self.1.eval(state)?)
    }
}

/// `sum_j c_j(q,p) <w|A_j|w> + g(q,p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridObservable<T: Real> {
    dofs: usize,
    quantum_dim: usize,
    terms: Vec<(PhasePolynomial<T>, HermitianOperator<T>)>,
    classical_part: PhasePolynomial<T>,
}

impl<T: Real> HybridObservable<T> {
    pub fn new(
        dofs: usize,
        quantum_dim: usize,
        terms: Vec<(PhasePolynomial<T>, HermitianOperator<T>)>,
        classical_part: PhasePolynomial<T>,
    ) -> Result<Self> {
        if classical_part.dofs() != dofs {
            return Err(Error::DimensionMismatch {
                expected: dofs,
                found: classical_part.dofs(),
            });
        }
        for (c, a) in &terms {
            if c.dofs() != dofs {
                return Err(Error::DimensionMismatch {
                    expected: dofs,
                    found: c.dofs(),
                });
            }
            if a.dim() != quantum_dim {
                return Err(Error::DimensionMismatch {
                    expected: quantum_dim,
                    found: a.dim(),
                });
            }
        }
        Ok(Self {
            dofs,
            quantum_dim,
            terms,
            classical_part,
        })
    }

    /// `c(q,p) <w|A|w>`.
    pub fn weighted(
        coefficient: PhasePolynomial<T>,
        operator: HermitianOperator<T>,
    ) -> Result<Self> {
        let dofs = coefficient.dofs();
        let d = operator.dim();
        Self::new(
            dofs,
            d,
            vec![(coefficient, operator)],
            PhasePolynomial::zero(dofs),
        )
    }

    /// `<w|A|w>`.
    pub fn expectation(dofs: usize, operator: HermitianOperator<T>) -> Self {
        let d = operator.dim();
        Self {
            dofs,
            quantum_dim: d,
            terms: vec![(PhasePolynomial::constant(dofs, T::one()), operator)],
            classical_part: PhasePolynomial::zero(dofs),
        }
    }

    /// A purely classical observable `g(q,p)`.
    pub fn classical(quantum_dim: usize, g: PhasePolynomial<T>) -> Self {
        Self {
            dofs: g.dofs(),
            quantum_dim,
            terms: Vec::new(),
            classical_part: g,
        }
    }

    /// The Hamilton function of a model written as an observable.
    pub fn from_hamiltonian(spec: &HybridHamiltonianSpec<T>) -> Result<Self> {
        let k = spec.dofs();
        let cs = spec.classical();
        let var = cs.params.position_variance();
        let mut terms = vec![(PhasePolynomial::constant(k, T::one()), spec.h0().clone())];
        for c in spec.couplings() {
            let smoothed = c
                .coefficient
                .iter()
                .map(|f| f.gaussian_smoothing(var))
                .collect::<Result<Vec<_>>>()?;
            terms.push((
                PhasePolynomial::from_q_factors(&smoothed),
                c.operator.clone(),
            ));
        }
        let v = cs.potential.gaussian_smoothing(var)?;
        let mut g = PhasePolynomial::zero(k);
        for i in 0..k {
            let p = PhasePolynomial::p(k, i);
            g = g
                .add(&p.mul(&p).scale(T::one() / (T::two() * cs.params.mass)))
                .add(&PhasePolynomial::from_q_polynomial(k, i, &v));
        }
        if spec.include_kinetic_fluctuation() {
            g = g.add(&PhasePolynomial::constant(
                k,
                cs.params.kinetic_fluctuation() * T::from_count(k),
            ));
        }
        Self::new(k, spec.quantum_dim(), terms, g)
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    pub fn quantum_dim(&self) -> usize {
        self.quantum_dim
    }

    pub fn terms(&self) -> &[(PhasePolynomial<T>, HermitianOperator<T>)] {
        &self.terms
    }

    pub fn classical_part(&self) -> &PhasePolynomial<T> {
        &self.classical_part
    }

    fn check(&self, state: &HybridState<T>) -> Result<()> {
        if state.classical.dofs() != self.dofs {
            return Err(Error::DimensionMismatch {
                expected: self.dofs,
                found: state.classical.dofs(),
            });
        }
        if state.omega.dim() != self.quantum_dim {
            return Err(Error::DimensionMismatch {
                expected: self.quantum_dim,
                found: state.omega.dim(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, state: &HybridState<T>) -> Result<T> {
        self.check(state)?;
        let (q, p) = (&state.classical.q, &state.classical.p);
        let mut total = self.classical_part.eval(q, p);
        for (c, a) in &self.terms {
            let coeff = c.eval(q, p);
            if coeff != T::zero() {
                total += coeff * a.quadratic_form(state.omega.amplitudes())?;
            }
        }
        Ok(total)
    }

    /// `(df/dq_i, df/dp_i)` at a state.
    fn classical_gradient(&self, state: &HybridState<T>) -> Result<(Vec<T>, Vec<T>)> {
        let (q, p) = (&state.classical.q, &state.classical.p);
        let expectations = self
            .terms
            .iter()
            .map(|(_, a)| a.quadratic_form(state.omega.amplitudes()))
            .collect::<Result<Vec<T>>>()?;
        let grad = |deriv: &dyn Fn(&PhasePolynomial<T>) -> PhasePolynomial<T>| {
            let mut g = deriv(&self.classical_part).eval(q, p);
            for ((c, _), &e) in self.terms.iter().zip(&expectations) {
                g += deriv(c).eval(q, p) * e;
            }
            g
        };
        let dq = (0..self.dofs).map(|i| grad(&|f| f.d_dq(i))).collect();
        let dp = (0..self.dofs).map(|i| grad(&|f| f.d_dp(i))).collect();
        Ok((dq, dp))
    }

    /// `sum_j c_j(q,p) A_j` at the classical point of a state.
    fn operator_at(&self, q: &[T], p: &[T]) -> Result<HermitianOperator<T>> {
        let mut m = HermitianOperator::zeros(self.quantum_dim);
        for (c, a) in &self.terms {
            m = m.add_scaled(c.eval(q, p), a)?;
        }
        Ok(m)
    }

    /// Product `self * other` as a state function.
    pub fn times(self: &Arc<Self>, other: Arc<dyn StateFunction<T>>) -> ProductFunction<T> {
        ProductFunction(self.clone(), other)
    }
}

impl<T: Real> StateFunction<T> for HybridObservable<T> {
    fn eval(&self, state: &HybridState<T>) -> Result<T> {
        self.evaluate(state)
    }
}

/// Analytic bracket `{f1, f2}` of two hybrid observables.
#[derive(Clone, Debug)]
pub struct BracketFunction<T: Real> {
    f1: HybridObservable<T>,
    f2: HybridObservable<T>,
    hbar: T,
}

impl<T: Real> BracketFunction<T> {
    /// Classical (canonical) part of the bracket.
    pub fn classical_part(&self, state: &HybridState<T>) -> Result<T> {
        let (q1, p1) = self.f1.classical_gradient(state)?;
        let (q2, p2) = self.f2.classical_gradient(state)?;
        Ok((0..q1.len()).fold(T::zero(), |acc, i| acc + q1[i] * p2[i] - q2[i] * p1[i]))
    }

    /// Quantum part `(1 / i hbar) <w|[M1, M2]|w>` with `M_k = sum_j c_j A_j`.
    pub fn quantum_part(&self, state: &HybridState<T>) -> Result<T> {
        let (q, p) = (&state.classical.q, &state.classical.p);
        let m1 = self.f1.operator_at(q, p)?;
        let m2 = self.f2.operator_at(q, p)?;
        crate::quantum::commutator_expectation(&m1, &m2, state.omega.amplitudes(), self.hbar)
    }
}

impl<T: Real> StateFunction<T> for BracketFunction<T> {
    fn eval(&self, state: &HybridState<T>) -> Result<T> {
        self.f1.check(state)?;
        Ok(self.classical_part(state)? + self.quantum_part(state)?)
    }
}

pub fn bracket_analytic<T: Real>(
    f1: &HybridObservable<T>,
    f2: &HybridObservable<T>,
    hbar: T,
) -> Result<BracketFunction<T>> {
    if f1.dofs != f2.dofs {
        return Err(Error::DimensionMismatch {
            expected: f1.dofs,
            found: f2.dofs,
        });
    }
    if f1.quantum_dim != f2.quantum_dim {
        return Err(Error::DimensionMismatch {
            expected: f1.quantum_dim,
            found: f2.quantum_dim,
        });
    }
    if !(hbar > T::zero()) {
        return Err(Error::ZeroHbar);
    }
    Ok(BracketFunction {
        f1: f1.clone(),
        f2: f2.clone(),
        hbar,
    })
}

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Central-difference partial derivative along one real coordinate of the
/// chart `(q, p, x, y)`.
fn partial<T: Real>(
    f: &dyn StateFunction<T>,
    state: &HybridState<T>,
    coord: usize,
    h: T,
) -> Result<T> {
    let plus = shift(state, coord, h);
    let minus = shift(state, coord, -h);
    Ok((f.eval(&plus)? - f.eval(&minus)?) / (T::two() * h))
}

fn shift<T: Real>(state: &HybridState<T>, coord: usize, h: T) -> HybridState<T> {
    let k = state.classical.dofs();
    let d = state.omega.dim();
    let mut s = state.clone();
    if coord < k {
        s.classical.q[coord] += h;
    } else if coord < 2 * k {
        s.classical.p[coord - k] += h;
    } else {
        let mut cc = state.omega.to_canonical();
        let m = coord - 2 * k;
        if m < d {
            cc.x[m] += h;
        } else {
            cc.y[m - d] += h;
        }
        s.omega = QuantumState::unnormalized(cc.amplitudes());
    }
    s
}

/// Finite-difference bracket in the real chart `(q, p, x, y)`.
pub fn bracket_numeric<T: Real>(
    f1: &dyn StateFunction<T>,
    f2: &dyn StateFunction<T>,
    state: &HybridState<T>,
    h: T,
    hbar: T,
) -> Result<T> {
    if !(h > T::zero()) || h > T::lit(1e-3) {
        return Err(Error::InvalidParameter(
            "finite-difference step must satisfy 0 < h <= 1e-3".into(),
        ));
    }
    if !(hbar > T::zero()) {
        return Err(Error::ZeroHbar);
    }
    let k = state.classical.dofs();
    let d = state.omega.dim();
    let mut total = T::zero();
    for i in 0..k {
        let (a_q, a_p) = (partial(f1, state, i, h)?, partial(f1, state, k + i, h)?);
        let (b_q, b_p) = (partial(f2, state, i, h)?, partial(f2, state, k + i, h)?);
        total += a_q * b_p - b_q * a_p;
    }
    let mut quantum = T::zero();
    for m in 0..d {
        let (a_x, a_y) = (
            partial(f1, state, 2 * k + m, h)?,
            partial(f1, state, 2 * k + d + m, h)?,
        );
        let (b_x, b_y) = (
            partial(f2, state, 2 * k + m, h)?,
            partial(f2, state, 2 * k + d + m, h)?,
        );
        quantum += a_x * b_y - a_y * b_x;
    }
    Ok(total + quantum / hbar)
}

/// Richardson-extrapolated numeric bracket `(4 B(h/2) - B(h)) / 3`.
pub fn bracket_numeric_richardson<T: Real>(
    f1: &dyn StateFunction<T>,
    f2: &dyn StateFunction<T>,
    state: &HybridState<T>,
    h: T,
    hbar: T,
) -> Result<T> {
    let coarse = bracket_numeric(f1, f2, state, h, hbar)?;
    let fine = bracket_numeric(f1, f2, state, h / T::two(), hbar)?;
    Ok((T::lit(4.0) * fine - coarse) / T::lit(3.0))
}

/// Result of the parallelogram-law quadraticity diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub enum Quadraticity<T: Real> {
    Quadratic,
    NotQuadratic {
        witness: (DVector<C<T>>, DVector<C<T>>),
        defect: T,
    },
}

impl<T: Real> Quadraticity<T> {
    pub fn is_quadratic(&self) -> bool {
        matches!(self, Quadraticity::Quadratic)
    }
}

/// Relative tolerance of the parallelogram test.
pub const QUADRATICITY_TOL: f64 = 1e-8;

/// `g(w1+w2) + g(w1-w2) - 2 g(w1) - 2 g(w2)` at a fixed classical point,
/// together with the magnitude scale of the four evaluations.
pub fn parallelogram_defect<T: Real>(
    g: &dyn StateFunction<T>,
    point: &ClassicalPoint<T>,
    w1: &DVector<C<T>>,
    w2: &DVector<C<T>>,
) -> Result<(T, T)> {
    let at = |v: DVector<C<T>>| {
        g.eval(&HybridState::new(
            point.clone(),
            QuantumState::unnormalized(v),
        ))
    };
    let sum = at(w1 + w2)?;
    let diff = at(w1 - w2)?;
    let a = at(w1.clone())?;
    let b = at(w2.clone())?;
    let defect = sum + diff - T::two() * (a + b);
    let scale = sum.abs() + diff.abs() + T::two() * (a.abs() + b.abs());
    Ok((defect, scale))
}

/// Tests whether `g` is a quadratic form in the quantum vector (at a fixed
/// classical point) via the parallelogram identity on random pairs.
pub fn quadraticity_test<T: Real>(
    g: &dyn StateFunction<T>,
    point: &ClassicalPoint<T>,
    quantum_dim: usize,
    samples: usize,
    seed: u64,
) -> Result<Quadraticity<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> DVector<C<T>> {
        DVector::from_fn(quantum_dim, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            cplx(T::lit(re), T::lit(im))
        })
    };
    for _ in 0..samples {
        let w1 = draw();
        let w2 = draw();
        let (defect, scale) = parallelogram_defect(g, point, &w1, &w2)?;
        if defect.abs() > T::lit(QUADRATICITY_TOL) * scale.max(T::one()) {
            return Ok(Quadraticity::NotQuadratic {
                witness: (w1, w2),
                defect,
            });
        }
    }
    Ok(Quadraticity::Quadratic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{pauli, PauliAxis};
    use approx::assert_abs_diff_eq;

    fn sz() -> HermitianOperator<f64> {
        pauli(PauliAxis::Z, 1, 1).unwrap()
    }

    fn state(q: f64, p: f64, w: &[(f64, f64)]) -> HybridState<f64> {
        HybridState::new(
            ClassicalPoint::one(q, p),
            QuantumState::normalize(DVector::from_iterator(
                w.len(),
                w.iter().map(|&(a, b)| cplx(a, b)),
            ))
            .unwrap(),
        )
    }

    #[test]
    fn evaluate_simple_observables() {
        let f = HybridObservable::weighted(PhasePolynomial::q(1, 0), sz()).unwrap();
        assert_eq!(
            f.evaluate(&state(2.0, 0.0, &[(1.0, 0.0), (0.0, 0.0)]))
                .unwrap(),
            2.0
        );
        let p = PhasePolynomial::p(1, 0);
        let g = HybridObservable::classical(2, p.mul(&p));
        assert_eq!(
            g.evaluate(&state(0.0, 3.0, &[(1.0, 0.0), (0.0, 0.0)]))
                .unwrap(),
            9.0
        );
    }

    #[test]
    fn canonical_pair() {
        let q = HybridObservable::classical(2, PhasePolynomial::q(1, 0));
        let p = HybridObservable::classical(2, PhasePolynomial::p(1, 0));
        let st = state(0.3, -0.2, &[(0.6, 0.1), (0.2, -0.7)]);
        let b = bracket_analytic(&q, &p, 1.0).unwrap();
        assert_eq!(b.eval(&st).unwrap(), 1.0);
        let n = bracket_numeric(&q, &p, &st, 1e-5, 1.0).unwrap();
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn spin_bracket() {
        let hbar = 0.7;
        let sx = HybridObservable::expectation(1, pauli(PauliAxis::X, 1, 1).unwrap());
        let sy = HybridObservable::expectation(1, pauli(PauliAxis::Y, 1, 1).unwrap());
        let st = state(0.0, 0.0, &[(0.6, 0.1), (0.2, -0.7)]);
        let expected = 2.0 / hbar * sz().quadratic_form(st.omega.amplitudes()).unwrap();
        let b = bracket_analytic(&sx, &sy, hbar).unwrap();
        assert_abs_diff_eq!(b.eval(&st).unwrap(), expected, epsilon = 1e-14);
        let n = bracket_numeric(&sx, &sy, &st, 1e-4, hbar).unwrap();
        assert_abs_diff_eq!(n, expected, epsilon = 1e-8);
    }

    #[test]
    fn weighted_sz_pair_gives_square() {
        let f1 = HybridObservable::weighted(PhasePolynomial::q(1, 0), sz()).unwrap();
        let f2 = HybridObservable::weighted(PhasePolynomial::p(1, 0), sz()).unwrap();
        let st = state(0.4, 1.3, &[(0.6, 0.1), (0.2, -0.7)]);
        let z = sz().quadratic_form(st.omega.amplitudes()).unwrap();
        let b = bracket_analytic(&f1, &f2, 1.0).unwrap();
        assert_abs_diff_eq!(b.eval(&st).unwrap(), z * z, epsilon = 1e-15);
        assert_eq!(b.quantum_part(&st).unwrap(), 0.0);
    }

    #[test]
    fn quadraticity_examples() {
        let point = ClassicalPoint::one(0.4, 1.3);
        let single = HybridObservable::expectation(1, pauli(PauliAxis::X, 1, 1).unwrap());
        assert!(quadraticity_test(&single, &point, 2, 50, 1)
            .unwrap()
            .is_quadratic());
        let zero = FnStateFunction(|_: &HybridState<f64>| Ok(0.0));
        assert!(quadraticity_test(&zero, &point, 2, 50, 1)
            .unwrap()
            .is_quadratic());

        let f1 = HybridObservable::weighted(PhasePolynomial::q(1, 0), sz()).unwrap();
        let f2 = HybridObservable::weighted(PhasePolynomial::p(1, 0), sz()).unwrap();
        let b = bracket_analytic(&f1, &f2, 1.0).unwrap();
        // eigenvectors of sz with opposite eigenvalues
        let up = DVector::from_vec(vec![cplx(1.0, 0.0), cplx(0.0, 0.0)]);
        let down = DVector::from_vec(vec![cplx(0.0, 0.0), cplx(1.0, 0.0)]);
        let (defect, _) = parallelogram_defect(&b, &point, &up, &down).unwrap();
        assert_abs_diff_eq!(defect, -4.0, epsilon = 1e-15);
        match quadraticity_test(&b, &point, 2, 50, 7).unwrap() {
            Quadraticity::NotQuadratic { defect, .. } => assert!(defect.abs() > 1e-3),
            Quadraticity::Quadratic => panic!("bracket output must fail the parallelogram law"),
        }
    }

    #[test]
    fn phase_polynomial_calculus() {
        let q = PhasePolynomial::<f64>::q(2, 1);
        let p = PhasePolynomial::<f64>::p(2, 0);
        let f = q
            .mul(&q)
            .mul(&p)
            .scale(3.0)
            .add(&PhasePolynomial::constant(2, 1.0));
        assert_eq!(f.eval(&[9.0, 2.0], &[0.5, 9.0]), 7.0);
        assert_eq!(f.d_dq(1).eval(&[0.0, 2.0], &[0.5, 0.0]), 6.0);
        assert_eq!(f.d_dp(0).eval(&[0.0, 2.0], &[0.5, 0.0]), 12.0);
        assert!(f.d_dq(0).is_zero());
        let round = PhasePolynomial::from_monomials(2, &f.to_monomials()).unwrap();
        assert_eq!(round, f);
    }

    #[test]
    fn numeric_step_bounds() {
        let q = HybridObservable::classical(2, PhasePolynomial::q(1, 0));
        let st = state(0.0, 0.0, &[(1.0, 0.0), (0.0, 0.0)]);
        assert!(bracket_numeric(&q, &q, &st, 1e-2, 1.0).is_err());
        assert!(bracket_numeric(&q, &q, &st, 0.0, 1.0).is_err());
    }
}

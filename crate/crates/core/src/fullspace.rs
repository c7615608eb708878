//! Verification layer in the full composite Hilbert space `Fock(N) ⊗ C^d`.
//!
//! One classical degree of freedom is realized as a truncated harmonic
//! oscillator basis. Coherent states, the fluctuation functional, the
//! composite Hamiltonian and its coherent-state projection are built here
//! independently of the reduced model, so the two layers can be compared.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::HybridHamiltonianSpec;
use crate::potential::{OscillatorParams, Polynomial};
use crate::quantum::{HermitianOperator, QuantumState};
use crate::scalar::{cabs, cplx, creal, Real, C};

/// Largest coherent-state tail weight beyond the truncation.
pub const TAIL_TOL: f64 = 1e-10;
/// Normalization tolerance for composite states.
pub const COMPOSITE_NORM_TOL: f64 = 1e-10;

/// Truncated Fock space of one oscillator mode with given `(m, Omega, hbar)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockSpace<T: Real> {
    levels: usize,
    params: OscillatorParams<T>,
}

/// Vector in `Fock(N) ⊗ C^d`, index `n * d + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeState<T: Real> {
    amplitudes: DVector<C<T>>,
    levels: usize,
    quantum_dim: usize,
}

impl<T: Real> CompositeState<T> {
    pub fn new(amplitudes: DVector<C<T>>, levels: usize, quantum_dim: usize) -> Result<Self> {
        if amplitudes.len() != levels * quantum_dim {
            return Err(Error::DimensionMismatch {
                expected: levels * quantum_dim,
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - T::one()).abs() > T::lit(COMPOSITE_NORM_TOL) {
            return Err(Error::NotNormalized {
                norm: norm.as_f64(),
            });
        }
        Ok(Self {
            amplitudes,
            levels,
            quantum_dim,
        })
    }

    /// `|osc> ⊗ |w>`.
    pub fn product(osc: &DVector<C<T>>, w: &DVector<C<T>>) -> Result<Self> {
        Self::new(osc.kronecker(w), osc.len(), w.len())
    }

    pub fn amplitudes(&self) -> &DVector<C<T>> {
        &self.amplitudes
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn quantum_dim(&self) -> usize {
        self.quantum_dim
    }
}

fn ladder<T: Real>(dim: usize) -> DMatrix<C<T>> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            creal(T::from_count(j).sqrt())
        } else {
            C::default()
        }
    })
}

fn truncate<T: Real>(m: &DMatrix<C<T>>, n: usize) -> DMatrix<C<T>> {
    m.view((0, 0), (n, n)).into_owned()
}

/// `tail[N] = sum_{n >= N} Poisson(n; mean)` evaluated from the top so that
/// tiny tails are not lost to cancellation.
fn poisson_tail(mean: f64, levels: usize) -> f64 {
    if mean == 0.0 {
        return if levels == 0 { 1.0 } else { 0.0 };
    }
    let ln_mean = mean.ln();
    let mut ln_term = -mean; // n = 0
    for n in 1..=levels {
        ln_term += ln_mean - (n as f64).ln();
    }
    let mut tail = 0.0;
    let mut n = levels;
    loop {
        let t = ln_term.exp();
        tail += t;
        n += 1;
        ln_term += ln_mean - (n as f64).ln();
        if (n as f64) > mean && t < tail * 1e-18 {
            break;
        }
        if n > levels + 100_000 {
            break;
        }
    }
    tail
}

impl<T: Real> FockSpace<T> {
    /// Requires `N >= 2` and `hbar > 0`.
    pub fn new(levels: usize, params: OscillatorParams<T>) -> Result<Self> {
        params.validate()?;
        if levels < 2 {
            return Err(Error::InvalidParameter(
                "Fock truncation needs at least 2 levels".into(),
            ));
        }
        if !(params.hbar > T::zero()) {
            return Err(Error::ZeroHbar);
        }
        Ok(Self { levels, params })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn params(&self) -> &OscillatorParams<T> {
        &self.params
    }

    /// Complex amplitude `alpha = (m Omega q + i p) / sqrt(2 m Omega hbar)`.
    pub fn alpha(&self, q: T, p: T) -> C<T> {
        let OscillatorParams { mass, omega, hbar } = self.params;
        let norm = (T::two() * mass * omega * hbar).sqrt();
        cplx(mass * omega * q / norm, p / norm)
    }

    /// Probability weight of the coherent state outside the truncation.
    pub fn tail_weight(&self, q: T, p: T) -> f64 {
        poisson_tail(cabs(&self.alpha(q, p)).as_f64().powi(2), self.levels)
    }

    /// Smallest truncation whose tail weight is within [`TAIL_TOL`].
    pub fn suggested_levels(&self, q: T, p: T) -> usize {
        let mean = cabs(&self.alpha(q, p)).as_f64().powi(2);
        let mut n = self.levels.max(2);
        while poisson_tail(mean, n) > TAIL_TOL {
            n += (n / 4).max(1);
        }
        n.next_power_of_two()
    }

    fn check_adequate(&self, q: T, p: T) -> Result<()> {
        let tail = self.tail_weight(q, p);
        if tail > TAIL_TOL || !tail.is_finite() {
            return Err(Error::TruncationInadequate {
                levels: self.levels,
                tail,
                suggested: self.suggested_levels(q, p),
            });
        }
        Ok(())
    }

    /// Coherent state `|q,p>` with amplitudes `e^{-|a|^2/2} a^n / sqrt(n!)`,
    /// renormalized after truncation.
    pub fn coherent_state(&self, q: T, p: T) -> Result<DVector<C<T>>> {
        self.check_adequate(q, p)?;
        let a = self.alpha(q, p);
        let mut v = DVector::<C<T>>::zeros(self.levels);
        v[0] = creal((-a.norm_sqr() / T::two()).exp());
        for n in 1..self.levels {
            v[n] = v[n - 1] * a / creal(T::from_count(n).sqrt());
        }
        let norm = v.norm();
        Ok(v / creal(norm))
    }

    fn q_scale(&self) -> T {
        (self.params.hbar / (T::two() * self.params.mass * self.params.omega)).sqrt()
    }

    fn p_scale(&self) -> T {
        (self.params.hbar * self.params.mass * self.params.omega / T::two()).sqrt()
    }

    fn position_in(&self, dim: usize) -> DMatrix<C<T>> {
        let a = ladder::<T>(dim);
        (&a + a.adjoint()) * creal(self.q_scale())
    }

    fn momentum_in(&self, dim: usize) -> DMatrix<C<T>> {
        let a = ladder::<T>(dim);
        (a.adjoint() - &a) * cplx(T::zero(), self.p_scale())
    }

    /// Truncated position operator.
    pub fn position(&self) -> DMatrix<C<T>> {
        self.position_in(self.levels)
    }

    /// Truncated momentum operator.
    pub fn momentum(&self) -> DMatrix<C<T>> {
        self.momentum_in(self.levels)
    }

    /// `f(q_hat)` computed in an enlarged basis and then truncated, so the
    /// retained `N x N` block is exact.
    pub fn position_polynomial(&self, f: &Polynomial<T>) -> DMatrix<C<T>> {
        let big = self.levels + f.degree() + 1;
        let x = self.position_in(big);
        let mut acc = DMatrix::<C<T>>::zeros(big, big);
        for &c in f.coefficients().iter().rev() {
            acc = &acc * &x + DMatrix::<C<T>>::identity(big, big) * creal(c);
        }
        truncate(&acc, self.levels)
    }

    /// `p_hat^2`, exact on the retained block.
    pub fn momentum_squared(&self) -> DMatrix<C<T>> {
        let p = self.momentum_in(self.levels + 2);
        truncate(&(&p * &p), self.levels)
    }

    /// `q p + p q`, exact on the retained block.
    pub fn position_momentum_anticommutator(&self) -> DMatrix<C<T>> {
        let big = self.levels + 2;
        let (q, p) = (self.position_in(big), self.momentum_in(big));
        truncate(&(&q * &p + &p * &q), self.levels)
    }

    /// `|q,p> ⊗ w`.
    pub fn compose_constrained_state(
        &self,
        q: T,
        p: T,
        w: &QuantumState<T>,
    ) -> Result<CompositeState<T>> {
        if !w.is_normalized() {
            return Err(Error::NotNormalized {
                norm: w.norm().as_f64(),
            });
        }
        CompositeState::product(&self.coherent_state(q, p)?, w.amplitudes())
    }

    /// Partial inner product `<q,p|psi>` on the quantum factor.
    pub fn reduce_composite_state(
        &self,
        psi: &CompositeState<T>,
        q: T,
        p: T,
    ) -> Result<DVector<C<T>>> {
        self.check_levels(psi.levels)?;
        let c = self.coherent_state(q, p)?;
        let d = psi.quantum_dim;
        let mut out = DVector::<C<T>>::zeros(d);
        for n in 0..self.levels {
            let cn = c[n].conj();
            for j in 0..d {
                out[j] += cn * psi.amplitudes[n * d + j];
            }
        }
        Ok(out)
    }

    fn check_levels(&self, levels: usize) -> Result<()> {
        if levels != self.levels {
            return Err(Error::DimensionMismatch {
                expected: self.levels,
                found: levels,
            });
        }
        Ok(())
    }

    /// Excess of `(dX)^2 + (dP)^2` over its minimum 1, in dimensionless
    /// quadratures `X = q sqrt(m Omega/hbar)`, `P = p / sqrt(m Omega hbar)`.
    /// Zero exactly on coherent product states.
    ///
    /// With `X^2 + P^2 = 2 a^+ a + 1` and `<X> + i<P> = sqrt(2) <a>` the
    /// excess is `2 (<n> - |<a>|^2)`, evaluated in `O(N d)`.
    pub fn fluctuation_functional(&self, psi: &CompositeState<T>) -> Result<T> {
        self.check_levels(psi.levels)?;
        let d = psi.quantum_dim;
        let v = &psi.amplitudes;
        let mut number = T::zero();
        let mut lower = C::<T>::default();
        for n in 1..self.levels {
            let sq = T::from_count(n).sqrt();
            for j in 0..d {
                let (prev, cur) = (v[(n - 1) * d + j], v[n * d + j]);
                number += T::from_count(n) * cur.norm_sqr();
                lower += prev.conj() * cur * creal(sq);
            }
        }
        Ok(T::two() * (number - lower.norm_sqr()))
    }

    /// Matrix of the full Hamiltonian
    /// `I ⊗ H0 + (p^2/2m + V(q)) ⊗ I + sum_j f_j(q) ⊗ A_j` for a one-mode model.
    pub fn build_composite_hamiltonian(
        &self,
        spec: &HybridHamiltonianSpec<T>,
    ) -> Result<HermitianOperator<T>> {
        if spec.dofs() != 1 {
            return Err(Error::InvalidParameter(
                "the full-space verifier realizes one classical mode".into(),
            ));
        }
        let cs = spec.classical();
        let d = spec.quantum_dim();
        let id_d = DMatrix::<C<T>>::identity(d, d);
        let id_n = DMatrix::<C<T>>::identity(self.levels, self.levels);
        let kinetic = self.momentum_squared() * creal(T::one() / (T::two() * cs.params.mass));
        let osc = kinetic + self.position_polynomial(&cs.potential);
        let mut h = id_n.kronecker(spec.h0().matrix()) + osc.kronecker(&id_d);
        for term in spec.couplings() {
            h += self
                .position_polynomial(&term.coefficient[0])
                .kronecker(term.operator.matrix());
        }
        HermitianOperator::new(h)
    }

    /// `<q,p|H|q,p>`, a `d x d` operator on the quantum factor.
    pub fn partial_expectation(
        &self,
        h: &HermitianOperator<T>,
        q: T,
        p: T,
    ) -> Result<HermitianOperator<T>> {
        let c = self.coherent_state(q, p)?;
        let n = self.levels;
        if !h.dim().is_multiple_of(n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: h.dim(),
            });
        }
        let d = h.dim() / n;
        let m = h.matrix();
        let mut out = DMatrix::<C<T>>::zeros(d, d);
        for a in 0..n {
            let ca = c[a].conj();
            for b in 0..n {
                let w = ca * c[b];
                if w == C::default() {
                    continue;
                }
                for j in 0..d {
                    for k in 0..d {
                        out[(j, k)] += w * m[(a * d + j, b * d + k)];
                    }
                }
            }
        }
        // symmetrize rounding only; the exact result is Hermitian
        let out = (&out + out.adjoint()) * creal(T::lit(0.5));
        HermitianOperator::new(out)
    }

    /// `H_alpha(q,p) = |q,p><q,p| ⊗ <q,p|H|q,p>`.
    pub fn build_h_alpha(&self, h: &HermitianOperator<T>, q: T, p: T) -> Result<HAlpha<T>> {
        Ok(HAlpha {
            coherent: self.coherent_state(q, p)?,
            partial: self.partial_expectation(h, q, p)?,
        })
    }

    /// `|<psi|[A1 ⊗ I, H_alpha]|psi>|` for an oscillator-sector operator `A1`.
    pub fn commutator_vanishing_check(
        &self,
        a1: &DMatrix<C<T>>,
        h_alpha: &HAlpha<T>,
        psi: &CompositeState<T>,
    ) -> Result<T> {
        self.check_levels(psi.levels)?;
        if a1.shape() != (self.levels, self.levels) {
            return Err(Error::DimensionMismatch {
                expected: self.levels,
                found: a1.nrows(),
            });
        }
        let d = psi.quantum_dim;
        if h_alpha.partial.dim() != d || h_alpha.coherent.len() != self.levels {
            return Err(Error::DimensionMismatch {
                expected: self.levels * d,
                found: h_alpha.coherent.len() * h_alpha.partial.dim(),
            });
        }
        // (A ⊗ B) v is A V B^T with V the N x d reshaping of v
        let v = DMatrix::from_row_slice(self.levels, d, psi.amplitudes.as_slice());
        let left = a1 * h_alpha.apply(&v);
        let right = h_alpha.apply(&(a1 * &v));
        Ok(cabs(&v.dotc(&(left - right))))
    }
}

/// Coherent-state projection of a composite Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct HAlpha<T: Real> {
    pub coherent: DVector<C<T>>,
    pub partial: HermitianOperator<T>,
}

impl<T: Real> HAlpha<T> {
    /// Full matrix `|c><c| ⊗ M`.
    pub fn matrix(&self) -> DMatrix<C<T>> {
        let proj = &self.coherent * self.coherent.adjoint();
        proj.kronecker(self.partial.matrix())
    }

    /// Action on an `N x d` reshaped composite vector.
    fn apply(&self, v: &DMatrix<C<T>>) -> DMatrix<C<T>> {
        let row = self.coherent.adjoint() * v;
        &self.coherent * (row * self.partial.matrix().transpose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn space(levels: usize) -> FockSpace<f64> {
        FockSpace::new(levels, OscillatorParams::new(1.3, 0.8, 0.9).unwrap()).unwrap()
    }

    fn expect(m: &DMatrix<C<f64>>, v: &DVector<C<f64>>) -> C<f64> {
        v.dotc(&(m * v))
    }

    #[test]
    fn vacuum_at_origin() {
        let c = space(16).coherent_state(0.0, 0.0).unwrap();
        assert_eq!(c[0], cplx(1.0, 0.0));
        assert!(c.iter().skip(1).all(|z| *z == C::default()));
    }

    #[test]
    fn coherent_moments_and_minimal_uncertainty() {
        let f = space(64);
        let (q, p) = (0.7, -1.1);
        let c = f.coherent_state(q, p).unwrap();
        let (x, pm) = (f.position(), f.momentum());
        let mq = expect(&x, &c).re;
        let mp = expect(&pm, &c).re;
        assert_abs_diff_eq!(mq, q, epsilon = 1e-9);
        assert_abs_diff_eq!(mp, p, epsilon = 1e-9);
        let q2 = expect(&f.position_polynomial(&Polynomial::monomial(1.0, 2)), &c).re;
        let p2 = expect(&f.momentum_squared(), &c).re;
        let hbar = 0.9;
        assert_abs_diff_eq!(
            (q2 - mq * mq) * (p2 - mp * mp),
            hbar * hbar / 4.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn inadequate_truncation_reported() {
        let f = space(8);
        match f.coherent_state(6.0, 3.0) {
            Err(Error::TruncationInadequate { suggested, .. }) => assert!(suggested > 8),
            other => panic!("expected truncation error, got {other:?}"),
        }
        assert!(FockSpace::new(1, OscillatorParams::new(1.0, 1.0, 1.0).unwrap()).is_err());
        assert!(matches!(
            FockSpace::new(8, OscillatorParams::new(1.0, 1.0, 0.0).unwrap()),
            Err(Error::ZeroHbar)
        ));
    }

    #[test]
    fn poisson_tail_matches_direct_sum() {
        let mean: f64 = 3.0;
        let mut direct = 0.0;
        let mut t = (-mean).exp();
        for n in 0..200 {
            if n >= 10 {
                direct += t;
            }
            t *= mean / (n + 1) as f64;
        }
        assert!((poisson_tail(mean, 10) - direct).abs() < 1e-15);
    }

    #[test]
    fn fock_one_excess_is_two() {
        let f = space(16);
        let mut osc = DVector::<C<f64>>::zeros(16);
        osc[1] = cplx(1.0, 0.0);
        let w = QuantumState::basis(2, 0).unwrap();
        let psi = CompositeState::product(&osc, w.amplitudes()).unwrap();
        assert_abs_diff_eq!(
            f.fluctuation_functional(&psi).unwrap(),
            2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn constrained_state_round_trip() {
        let f = space(64);
        let w = QuantumState::normalize(DVector::from_vec(vec![cplx(0.3, 0.4), cplx(-0.5, 0.1)]))
            .unwrap();
        let psi = f.compose_constrained_state(0.4, 0.9, &w).unwrap();
        assert_abs_diff_eq!(psi.amplitudes().norm(), 1.0, epsilon = 1e-12);
        assert!(f.fluctuation_functional(&psi).unwrap().abs() < 1e-8);
        let back = f.reduce_composite_state(&psi, 0.4, 0.9).unwrap();
        assert!((back - w.amplitudes()).norm() < 1e-8);
    }

    #[test]
    fn position_polynomial_block_is_exact() {
        let f = space(10);
        let x = f.position_in(20);
        let x4 = &x * &x * &x * &x;
        let direct = truncate(&x4, 10);
        let via = f.position_polynomial(&Polynomial::monomial(1.0, 4));
        assert!((direct - via).iter().all(|z| cabs(z) < 1e-12));
    }

    #[test]
    fn commutator_check_matches_dense_commutator() {
        let spec = crate::model::ReferenceModel::<f64>::demo()
            .to_spec()
            .unwrap();
        let f = FockSpace::new(24, spec.classical().params).unwrap();
        let h = f.build_composite_hamiltonian(&spec).unwrap();
        let ha = f.build_h_alpha(&h, 0.9, -0.4).unwrap();
        let mut osc = DVector::<C<f64>>::zeros(24);
        osc[1] = cplx(1.0, 0.0);
        let w = QuantumState::normalize(DVector::from_vec(vec![
            cplx(0.5, 0.1),
            cplx(0.2, -0.3),
            cplx(-0.4, 0.2),
            cplx(0.1, 0.6),
        ]))
        .unwrap();
        let psi = CompositeState::product(&osc, w.amplitudes()).unwrap();
        let a = f.position();
        let big_a = a.kronecker(&DMatrix::<C<f64>>::identity(4, 4));
        let m = ha.matrix();
        let comm = &big_a * &m - &m * &big_a;
        let dense = cabs(&psi.amplitudes().dotc(&(comm * psi.amplitudes())));
        let fast = f.commutator_vanishing_check(&a, &ha, &psi).unwrap();
        assert_abs_diff_eq!(dense, fast, epsilon = 1e-12);
        assert!(fast > 1e-3);

        let on = f.compose_constrained_state(0.9, -0.4, &w).unwrap();
        assert!(f.commutator_vanishing_check(&a, &ha, &on).unwrap() < 1e-10);
    }
}

//! Hybrid model definition and its equations of motion on the reduced chart
//! `(q, p, w)` of the coherent-state constrained manifold.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::potential::{h_osc, h_osc_dq, OscillatorParams, Polynomial};
use crate::quantum::{pauli, HermitianOperator, PauliAxis, QuantumState};
use crate::scalar::{cplx, Real, C};

/// Positions and momenta of the `k` classical degrees of freedom.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalPoint<T: Real> {
    pub q: Vec<T>,
    pub p: Vec<T>,
}

impl<T: Real> ClassicalPoint<T> {
    pub fn new(q: Vec<T>, p: Vec<T>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                found: p.len(),
            });
        }
        if q.iter().chain(p.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "classical coordinates must be finite".into(),
            ));
        }
        Ok(Self { q, p })
    }

    /// Single degree of freedom.
    pub fn one(q: T, p: T) -> Self {
        Self {
            q: vec![q],
            p: vec![p],
        }
    }

    pub fn dofs(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|x| x.is_finite())
    }
}

/// `f(q) * A` where `f(q) = prod_i coefficient[i](q_i)` depends on positions only.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTerm<T: Real> {
    pub coefficient: Vec<Polynomial<T>>,
    pub operator: HermitianOperator<T>,
}

impl<T: Real> CouplingTerm<T> {
    /// `c * q_dof * A` for a single coupled degree of freedom.
    pub fn linear(dofs: usize, dof: usize, c: T, operator: HermitianOperator<T>) -> Self {
        let coefficient = (0..dofs)
            .map(|i| {
                if i == dof {
                    Polynomial::monomial(c, 1)
                } else {
                    Polynomial::constant(T::one())
                }
            })
            .collect();
        Self {
            coefficient,
            operator,
        }
    }

    /// Per-factor coherent smoothing of the coefficient; this is how the
    /// coefficient enters `<q,p|H|q,p>`. Identity for factors of degree <= 1.
    fn smoothed(&self, params: &OscillatorParams<T>) -> Result<Vec<Polynomial<T>>> {
        if params.hbar == T::zero() {
            return Ok(self.coefficient.clone());
        }
        let var = params.position_variance();
        self.coefficient
            .iter()
            .map(|f| f.gaussian_smoothing(var))
            .collect()
    }
}

fn product_value<T: Real>(factors: &[Polynomial<T>], q: &[T]) -> T {
    factors
        .iter()
        .zip(q)
        .fold(T::one(), |acc, (f, &x)| acc * f.eval(x))
}

fn product_gradient<T: Real>(factors: &[Polynomial<T>], q: &[T]) -> Vec<T> {
    (0..factors.len())
        .map(|i| {
            factors
                .iter()
                .zip(q)
                .enumerate()
                .fold(T::one(), |acc, (j, (f, &x))| {
                    if i == j {
                        acc * f.derivative(1).eval(x)
                    } else {
                        acc * f.eval(x)
                    }
                })
        })
        .collect()
}

/// The classical sector: `k` identical oscillators `p^2/2m + V(q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalSector<T: Real> {
    pub potential: Polynomial<T>,
    pub params: OscillatorParams<T>,
    pub dofs: usize,
}

/// Hybrid Hamiltonian: bare quantum part `H0`, q-dependent couplings and a
/// purely classical oscillator part.
///
/// Classical-only scalars live exclusively in the oscillator part; the
/// effective quantum Hamiltonian never contains them.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridHamiltonianSpec<T: Real> {
    h0: HermitianOperator<T>,
    couplings: Vec<CouplingTerm<T>>,
    classical: ClassicalSector<T>,
    include_kinetic_fluctuation: bool,
}

impl<T: Real> HybridHamiltonianSpec<T> {
    pub fn new(
        h0: HermitianOperator<T>,
        couplings: Vec<CouplingTerm<T>>,
        classical: ClassicalSector<T>,
    ) -> Result<Self> {
        classical.params.validate()?;
        if classical.dofs == 0 {
            return Err(Error::InvalidParameter(
                "at least one classical degree of freedom".into(),
            ));
        }
        if !classical.potential.is_finite() {
            return Err(Error::InvalidParameter(
                "potential coefficients must be finite".into(),
            ));
        }
        let d = h0.dim();
        for c in &couplings {
            if c.operator.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.operator.dim(),
                });
            }
            if c.coefficient.len() != classical.dofs {
                return Err(Error::DimensionMismatch {
                    expected: classical.dofs,
                    found: c.coefficient.len(),
                });
            }
            if c.coefficient.iter().any(|f| !f.is_finite()) {
                return Err(Error::InvalidParameter(
                    "coupling coefficients must be finite".into(),
                ));
            }
        }
        Ok(Self {
            h0,
            couplings,
            classical,
            include_kinetic_fluctuation: false,
        })
    }

    /// Adds the constant `k hbar Omega / 4` to the Hamilton function.
    pub fn with_kinetic_fluctuation(mut self, on: bool) -> Self {
        self.include_kinetic_fluctuation = on;
        self
    }

    pub fn quantum_dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn dofs(&self) -> usize {
        self.classical.dofs
    }

    pub fn hbar(&self) -> T {
        self.classical.params.hbar
    }

    pub fn h0(&self) -> &HermitianOperator<T> {
        &self.h0
    }

    pub fn couplings(&self) -> &[CouplingTerm<T>] {
        &self.couplings
    }

    pub fn classical(&self) -> &ClassicalSector<T> {
        &self.classical
    }

    pub fn include_kinetic_fluctuation(&self) -> bool {
        self.include_kinetic_fluctuation
    }

    pub fn has_couplings(&self) -> bool {
        !self.couplings.is_empty()
    }

    /// Same model with the couplings removed.
    pub fn decoupled(&self) -> Self {
        Self {
            couplings: Vec::new(),
            ..self.clone()
        }
    }

    /// Same model with a different `hbar`.
    pub fn with_hbar(&self, hbar: T) -> Result<Self> {
        let mut s = self.clone();
        s.classical.params.hbar = hbar;
        s.classical.params.validate()?;
        Ok(s)
    }

    /// Same model with one coupling coefficient negated (diagnostic use).
    pub fn with_negated_coupling(&self, index: usize) -> Result<Self> {
        let mut s = self.clone();
        let term = s.couplings.get_mut(index).ok_or(Error::DimensionMismatch {
            expected: self.couplings.len(),
            found: index,
        })?;
        if let Some(first) = term.coefficient.first_mut() {
            *first = first.scale(-T::one());
        }
        Ok(s)
    }

    fn check_state(&self, state: &HybridState<T>) -> Result<()> {
        if state.classical.dofs() != self.dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.dofs(),
                found: state.classical.dofs(),
            });
        }
        if state.omega.dim() != self.quantum_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.quantum_dim(),
                found: state.omega.dim(),
            });
        }
        Ok(())
    }

    /// `H0 + sum_j <f_j>(q) A_j`: the partial coherent-state expectation of the
    /// quantum and coupling parts, acting on the quantum sector.
    pub fn effective_quantum_hamiltonian(&self, q: &[T]) -> Result<HermitianOperator<T>> {
        if q.len() != self.dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.dofs(),
                found: q.len(),
            });
        }
        let mut h = self.h0.clone();
        for term in &self.couplings {
            let f = product_value(&term.smoothed(&self.classical.params)?, q);
            h = h.add_scaled(f, &term.operator)?;
        }
        Ok(h)
    }

    /// `H_t = <w|H_eff(q)|w> + sum_i h_osc(q_i, p_i)`.
    pub fn hamiltonian_value(&self, state: &HybridState<T>) -> Result<T> {
        self.hamiltonian_value_with(state, self.include_kinetic_fluctuation)
    }

    pub fn hamiltonian_value_with(
        &self,
        state: &HybridState<T>,
        include_kinetic_fluctuation: bool,
    ) -> Result<T> {
        self.check_state(state)?;
        let quantum = self
            .effective_quantum_hamiltonian(&state.classical.q)?
            .quadratic_form(state.omega.amplitudes())?;
        let cs = &self.classical;
        let mut classical = T::zero();
        for (&q, &p) in state.classical.q.iter().zip(&state.classical.p) {
            classical += h_osc(q, p, &cs.potential, &cs.params, include_kinetic_fluctuation)?;
        }
        Ok(quantum + classical)
    }

    /// Analytic `(dH/dq, dH/dp)`; the quantum contribution is the
    /// Hellmann-Feynman force `<w|d H_eff / dq|w>`.
    pub fn classical_gradients(&self, state: &HybridState<T>) -> Result<(Vec<T>, Vec<T>)> {
        self.check_state(state)?;
        let cs = &self.classical;
        let q = &state.classical.q;
        let mut dhdq = q
            .iter()
            .map(|&x| h_osc_dq(x, &cs.potential, &cs.params))
            .collect::<Result<Vec<T>>>()?;
        for term in &self.couplings {
            let grad = product_gradient(&term.smoothed(&cs.params)?, q);
            if grad.iter().all(|g| *g == T::zero()) {
                continue;
            }
            let a = term.operator.quadratic_form(state.omega.amplitudes())?;
            for (d, g) in dhdq.iter_mut().zip(grad) {
                *d += g * a;
            }
        }
        let dhdp = state
            .classical
            .p
            .iter()
            .map(|&p| p / cs.params.mass)
            .collect();
        Ok((dhdq, dhdp))
    }

    /// Right-hand side of `q' = dH/dp`, `p' = -dH/dq`, `i hbar w' = H_eff(q) w`.
    pub fn eom_rhs(&self, state: &HybridState<T>) -> Result<EomRhs<T>> {
        let hbar = self.hbar();
        if !(hbar > T::zero()) {
            return Err(Error::ZeroHbar);
        }
        let (dhdq, dhdp) = self.classical_gradients(state)?;
        let h = self.effective_quantum_hamiltonian(&state.classical.q)?;
        let factor = cplx(T::zero(), -T::one() / hbar);
        let domega = (h.matrix() * state.omega.amplitudes()) * factor;
        Ok(EomRhs {
            dq: dhdp,
            dp: dhdq.into_iter().map(|x| -x).collect(),
            domega,
        })
    }

    /// Phase rate `(q dH/dq + p dH/dp) / 2`, a pure global phase of `w`.
    pub fn gauge_phase_term(&self, state: &HybridState<T>) -> Result<T> {
        let (dhdq, dhdp) = self.classical_gradients(state)?;
        let c = &state.classical;
        let s =
            c.q.iter()
                .zip(&dhdq)
                .fold(T::zero(), |a, (x, g)| a + *x * *g)
                + c.p
                    .iter()
                    .zip(&dhdp)
                    .fold(T::zero(), |a, (x, g)| a + *x * *g);
        Ok(s / T::two())
    }
}

/// Time derivatives of the reduced coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct EomRhs<T: Real> {
    pub dq: Vec<T>,
    pub dp: Vec<T>,
    pub domega: DVector<C<T>>,
}

/// A point of the constrained manifold in reduced coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState<T: Real> {
    pub classical: ClassicalPoint<T>,
    pub omega: QuantumState<T>,
}

impl<T: Real> HybridState<T> {
    pub fn new(classical: ClassicalPoint<T>, omega: QuantumState<T>) -> Self {
        Self { classical, omega }
    }

    pub fn is_finite(&self) -> bool {
        self.classical.is_finite() && self.omega.is_finite()
    }
}

/// Parameters of the two-qubit plus nonlinear oscillator reference model
/// `eps s1z + eps s2z + mu s1x s2x + p^2/2m + V(q) + q (l1 s1z + l2 s2z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceModel<T: Real> {
    pub epsilon: T,
    pub mu: T,
    pub lambda1: T,
    pub lambda2: T,
    pub potential: Polynomial<T>,
    pub params: OscillatorParams<T>,
    /// Couple `lambda2` to the first qubit instead of the second.
    pub lambda2_on_first_qubit: bool,
}

impl<T: Real> ReferenceModel<T> {
    /// eps=1, mu=0.5, l1=0.3, l2=0.2, m=Omega=hbar=1, V = q^2/2 + 0.1 q^4.
    pub fn demo() -> Self {
        Self {
            epsilon: T::lit(1.0),
            mu: T::lit(0.5),
            lambda1: T::lit(0.3),
            lambda2: T::lit(0.2),
            potential: Polynomial::new(vec![
                T::zero(),
                T::zero(),
                T::lit(0.5),
                T::zero(),
                T::lit(0.1),
            ]),
            params: OscillatorParams {
                mass: T::one(),
                omega: T::one(),
                hbar: T::one(),
            },
            lambda2_on_first_qubit: false,
        }
    }

    /// Bare two-qubit Hamiltonian `eps s1z + eps s2z + mu s1x s2x`.
    pub fn spin_hamiltonian(&self) -> Result<HermitianOperator<T>> {
        let z1 = pauli(PauliAxis::Z, 1, 2)?;
        let z2 = pauli(PauliAxis::Z, 2, 2)?;
        let xx = pauli(PauliAxis::X, 1, 2)?.mul_commuting(&pauli(PauliAxis::X, 2, 2)?)?;
        z1.scale(self.epsilon)
            .add_scaled(self.epsilon, &z2)?
            .add_scaled(self.mu, &xx)
    }

    pub fn to_spec(&self) -> Result<HybridHamiltonianSpec<T>> {
        let z1 = pauli(PauliAxis::Z, 1, 2)?;
        let z2 = pauli(PauliAxis::Z, 2, 2)?;
        let second = if self.lambda2_on_first_qubit {
            z1.clone()
        } else {
            z2
        };
        let couplings = vec![
            CouplingTerm::linear(1, 0, self.lambda1, z1),
            CouplingTerm::linear(1, 0, self.lambda2, second),
        ];
        HybridHamiltonianSpec::new(
            self.spin_hamiltonian()?,
            couplings,
            ClassicalSector {
                potential: self.potential.clone(),
                params: self.params,
                dofs: 1,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec() -> HybridHamiltonianSpec<f64> {
        ReferenceModel::demo().to_spec().unwrap()
    }

    fn op_diff(a: &HermitianOperator<f64>, b: &HermitianOperator<f64>) -> f64 {
        (a.matrix() - b.matrix())
            .iter()
            .fold(0.0, |m, z| m.max(z.norm_sqr().sqrt()))
    }

    #[test]
    fn effective_hamiltonian_at_origin_is_spin_part() {
        let m = ReferenceModel::<f64>::demo();
        let h = spec().effective_quantum_hamiltonian(&[0.0]).unwrap();
        assert_eq!(op_diff(&h, &m.spin_hamiltonian().unwrap()), 0.0);
    }

    #[test]
    fn effective_hamiltonian_adds_linear_couplings() {
        let m = ReferenceModel::<f64>::demo();
        let q = 0.8;
        let h = spec().effective_quantum_hamiltonian(&[q]).unwrap();
        let z1 = pauli(PauliAxis::Z, 1, 2).unwrap();
        let z2 = pauli(PauliAxis::Z, 2, 2).unwrap();
        let expected = m
            .spin_hamiltonian()
            .unwrap()
            .add_scaled(0.3 * q, &z1)
            .unwrap()
            .add_scaled(0.2 * q, &z2)
            .unwrap();
        assert!(op_diff(&h, &expected) < 1e-15);

        let literal = ReferenceModel {
            lambda2_on_first_qubit: true,
            ..m.clone()
        };
        let h = literal
            .to_spec()
            .unwrap()
            .effective_quantum_hamiltonian(&[q])
            .unwrap();
        let expected = m
            .spin_hamiltonian()
            .unwrap()
            .add_scaled(0.5 * q, &z1)
            .unwrap();
        assert!(op_diff(&h, &expected) < 1e-15);
    }

    #[test]
    fn no_couplings_means_q_independent() {
        let s = spec().decoupled();
        let a = s.effective_quantum_hamiltonian(&[-3.0]).unwrap();
        let b = s.effective_quantum_hamiltonian(&[5.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hamiltonian_value_by_hand() {
        let m = ReferenceModel {
            mu: 0.0,
            lambda1: 0.0,
            lambda2: 0.0,
            potential: Polynomial::harmonic(1.5, 2.0),
            params: OscillatorParams::new(1.5, 2.0, 0.0).unwrap(),
            ..ReferenceModel::demo()
        };
        let s = m.to_spec().unwrap();
        let (q, p) = (0.4, -0.9);
        let st = HybridState::new(
            ClassicalPoint::one(q, p),
            QuantumState::basis(4, 0).unwrap(),
        );
        let expected = 2.0 + p * p / 3.0 + 0.5 * 1.5 * 4.0 * q * q;
        assert_abs_diff_eq!(s.hamiltonian_value(&st).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn zero_spec_has_zero_energy() {
        let s = HybridHamiltonianSpec::new(
            HermitianOperator::zeros(2),
            vec![],
            ClassicalSector {
                potential: Polynomial::zero(),
                params: OscillatorParams::new(1.0, 1.0, 1.0).unwrap(),
                dofs: 1,
            },
        )
        .unwrap();
        let st = HybridState::new(
            ClassicalPoint::one(0.0, 0.0),
            QuantumState::basis(2, 1).unwrap(),
        );
        assert_eq!(s.hamiltonian_value(&st).unwrap(), 0.0);
    }

    #[test]
    fn harmonic_macro_limit_gradient() {
        let s = HybridHamiltonianSpec::new(
            HermitianOperator::zeros(2),
            vec![],
            ClassicalSector {
                potential: Polynomial::harmonic(2.0, 3.0),
                params: OscillatorParams::new(2.0, 3.0, 0.0).unwrap(),
                dofs: 1,
            },
        )
        .unwrap();
        let st = HybridState::new(
            ClassicalPoint::one(0.7, 1.0),
            QuantumState::basis(2, 0).unwrap(),
        );
        let (dq, dp) = s.classical_gradients(&st).unwrap();
        assert_abs_diff_eq!(dq[0], 2.0 * 9.0 * 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(dp[0], 0.5);
    }

    #[test]
    fn stationary_point_is_pure_phase() {
        let m = ReferenceModel {
            lambda1: 0.0,
            lambda2: 0.0,
            ..ReferenceModel::demo()
        };
        let s = m.to_spec().unwrap();
        let (vals, vecs) = s.h0().eigh().unwrap();
        let w = QuantumState::new(vecs.column(0).into_owned()).unwrap();
        let st = HybridState::new(ClassicalPoint::one(0.0, 0.0), w.clone());
        let rhs = s.eom_rhs(&st).unwrap();
        assert_eq!(rhs.dq, vec![0.0]);
        assert_eq!(rhs.dp, vec![0.0]);
        let expected = w.amplitudes() * cplx(0.0, -vals[0]);
        assert!((rhs.domega - expected).norm() < 1e-13);
    }

    #[test]
    fn eom_requires_positive_hbar() {
        let s = spec().with_hbar(0.0).unwrap();
        let st = HybridState::new(
            ClassicalPoint::one(0.1, 0.2),
            QuantumState::basis(4, 0).unwrap(),
        );
        assert!(matches!(s.eom_rhs(&st), Err(Error::ZeroHbar)));
    }

    #[test]
    fn gauge_term_definition() {
        let s = spec();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let w = QuantumState::from_pairs(&[(h, 0.0), (0.0, 0.0), (0.0, h), (0.0, 0.0)]).unwrap();
        let origin = HybridState::new(ClassicalPoint::one(0.0, 0.0), w.clone());
        assert_eq!(s.gauge_phase_term(&origin).unwrap(), 0.0);
        let st = HybridState::new(ClassicalPoint::one(0.6, -0.3), w);
        let (gq, gp) = s.classical_gradients(&st).unwrap();
        let g = s.gauge_phase_term(&st).unwrap();
        assert_abs_diff_eq!(g, (0.6 * gq[0] - 0.3 * gp[0]) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn validation_rejects_mismatched_dims() {
        let m = ReferenceModel::<f64>::demo();
        let bad = CouplingTerm::linear(1, 0, 1.0, HermitianOperator::identity(2));
        let err = HybridHamiltonianSpec::new(
            m.spin_hamiltonian().unwrap(),
            vec![bad],
            ClassicalSector {
                potential: m.potential.clone(),
                params: m.params,
                dofs: 1,
            },
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let err = HybridHamiltonianSpec::new(
            m.spin_hamiltonian().unwrap(),
            vec![],
            ClassicalSector {
                potential: m.potential.clone(),
                params: m.params,
                dofs: 0,
            },
        );
        assert!(err.is_err());
    }
}

//! Univariate polynomial potentials and their coherent-state expectations.
//!
//! For a minimal-uncertainty coherent state of an oscillator with mass `m`,
//! frequency `Omega` and action `hbar`, the position distribution is Gaussian
//! with variance `hbar / (2 m Omega)`. The expectation of a polynomial `V(q)`
//! is therefore the Gaussian smoothing of `V`, which terminates:
//!
//! ```text
//! <q,p|V|q,p> = V(q) + sum_{k>=1} hbar^k V^(2k)(q) / (2^k k! (2 m Omega)^k)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Highest polynomial degree accepted by the smoothing series.
pub const MAX_DEGREE: usize = 30;

/// `sum_n coefficients[n] q^n`, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<T>", into = "Vec<T>")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Polynomial<T: Real> {
    coefficients: Vec<T>,
}

impl<T: Real> From<Vec<T>> for Polynomial<T> {
    fn from(v: Vec<T>) -> Self {
        Self::new(v)
    }
}

impl<T: Real> From<Polynomial<T>> for Vec<T> {
    fn from(p: Polynomial<T>) -> Self {
        p.coefficients
    }
}

impl<T: Real> Polynomial<T> {
    pub fn new(mut coefficients: Vec<T>) -> Self {
        while coefficients.last().is_some_and(|c| *c == T::zero()) {
            coefficients.pop();
        }
        Self { coefficients }
    }

    pub fn zero() -> Self {
        Self {
            coefficients: Vec::new(),
        }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// `c q^n`.
    pub fn monomial(c: T, n: usize) -> Self {
        let mut v = vec![T::zero(); n + 1];
        v[n] = c;
        Self::new(v)
    }

    /// `(1/2) m Omega^2 q^2`.
    pub fn harmonic(mass: T, omega: T) -> Self {
        Self::monomial(mass * omega * omega / T::two(), 2)
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients.iter().all(|c| c.is_finite())
    }

    pub fn eval(&self, q: T) -> T {
        self.coefficients
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * q + c)
    }

    /// `n`-th formal derivative; zero once `n` exceeds the degree.
    pub fn derivative(&self, n: usize) -> Self {
        if n == 0 {
            return self.clone();
        }
        if n > self.degree() || self.is_zero() {
            return Self::zero();
        }
        let coefficients = self.coefficients[n..]
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                // (j+n)! / j!
                let falling = ((j + 1)..=(j + n)).fold(T::one(), |acc, f| acc * T::from_count(f));
                c * falling
            })
            .collect();
        Self::new(coefficients)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coefficients.len().max(other.coefficients.len());
        let get = |v: &[T], i: usize| v.get(i).copied().unwrap_or_else(T::zero);
        Self::new(
            (0..n)
                .map(|i| get(&self.coefficients, i) + get(&other.coefficients, i))
                .collect(),
        )
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.coefficients.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.coefficients.len() + other.coefficients.len() - 1];
        for (i, &a) in self.coefficients.iter().enumerate() {
            for (j, &b) in other.coefficients.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Gaussian smoothing `q -> E[V(q + xi)]`, `xi ~ N(0, variance)`, as a
    /// polynomial: `sum_k variance^k V^(2k) / (2^k k!)`.
    pub fn gaussian_smoothing(&self, variance: T) -> Result<Self> {
        if self.degree() > MAX_DEGREE {
            return Err(Error::DegreeUnsupported {
                degree: self.degree(),
                max: MAX_DEGREE,
            });
        }
        let mut out = self.clone();
        if variance == T::zero() {
            return Ok(out);
        }
        let mut weight = T::one();
        for k in 1..=self.degree() / 2 {
            weight = weight * variance / (T::two() * T::from_count(k));
            out = out.add(&self.derivative(2 * k).scale(weight));
        }
        Ok(out)
    }
}

/// Oscillator constants of the would-be-classical sector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct OscillatorParams<T: Real> {
    pub mass: T,
    pub omega: T,
    pub hbar: T,
}

impl<T: Real> OscillatorParams<T> {
    pub fn new(mass: T, omega: T, hbar: T) -> Result<Self> {
        let p = Self { mass, omega, hbar };
        p.validate()?;
        Ok(p)
    }

    /// `m > 0`, `Omega > 0`, `hbar >= 0`; `hbar = 0` is the macro-limit.
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > T::zero()) || !self.mass.is_finite() {
            return Err(Error::InvalidParameter("mass must be positive".into()));
        }
        if !(self.omega > T::zero()) || !self.omega.is_finite() {
            return Err(Error::InvalidParameter("Omega must be positive".into()));
        }
        if !(self.hbar >= T::zero()) || !self.hbar.is_finite() {
            return Err(Error::InvalidParameter("hbar must be non-negative".into()));
        }
        Ok(())
    }

    /// Coherent-state position variance `hbar / (2 m Omega)`.
    pub fn position_variance(&self) -> T {
        self.hbar / (T::two() * self.mass * self.omega)
    }

    /// Kinetic zero-point constant `hbar Omega / 4` from `<p^2> = p^2 + hbar m Omega / 2`.
    pub fn kinetic_fluctuation(&self) -> T {
        self.hbar * self.omega / T::lit(4.0)
    }
}

/// `<q,p|V(q)|q,p>` via the terminating derivative series.
pub fn coherent_expectation<T: Real>(
    v: &Polynomial<T>,
    q: T,
    params: &OscillatorParams<T>,
) -> Result<T> {
    params.validate()?;
    if params.hbar == T::zero() {
        return Ok(v.eval(q));
    }
    Ok(v.gaussian_smoothing(params.position_variance())?.eval(q))
}

/// `E[V(q + xi)]` for zero-mean Gaussian `xi` with the given variance,
/// computed by binomial expansion and the closed even moments
/// `E[xi^(2n)] = (2n-1)!! variance^n`. Independent of the derivative series.
pub fn gaussian_moment_oracle<T: Real>(v: &Polynomial<T>, q: T, variance: T) -> Result<T> {
    if !(variance >= T::zero()) {
        return Err(Error::InvalidParameter(
            "variance must be non-negative".into(),
        ));
    }
    let deg = v.coefficients().len();
    // moments[j] = E[xi^j]
    let mut moments = vec![T::zero(); deg.max(1)];
    moments[0] = T::one();
    for j in (2..deg).step_by(2) {
        moments[j] = moments[j - 2] * T::from_count(j - 1) * variance;
    }
    let mut total = T::zero();
    for (n, &a) in v.coefficients().iter().enumerate() {
        let mut binom = T::one();
        let mut inner = T::zero();
        #[allow(clippy::needless_range_loop)]
        for j in 0..=n {
            if j > 0 {
                binom = binom * T::from_count(n - j + 1) / T::from_count(j);
            }
            if j % 2 == 0 {
                inner += binom * q.powi((n - j) as i32) * moments[j];
            }
        }
        total += a * inner;
    }
    Ok(total)
}

/// Coherent-state expectation of the oscillator Hamiltonian for one degree of
/// freedom. With `include_kinetic_fluctuation` the constant `hbar Omega / 4`
/// from `<p^2>` is added; it never affects dynamics.
pub fn h_osc<T: Real>(
    q: T,
    p: T,
    v: &Polynomial<T>,
    params: &OscillatorParams<T>,
    include_kinetic_fluctuation: bool,
) -> Result<T> {
    let mut h = p * p / (T::two() * params.mass) + coherent_expectation(v, q, params)?;
    if include_kinetic_fluctuation {
        h += params.kinetic_fluctuation();
    }
    Ok(h)
}

/// `d h_osc / dq`, i.e. the coherent expectation of `V'`.
pub fn h_osc_dq<T: Real>(q: T, v: &Polynomial<T>, params: &OscillatorParams<T>) -> Result<T> {
    coherent_expectation(&v.derivative(1), q, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(c: &[f64]) -> Polynomial<f64> {
        Polynomial::new(c.to_vec())
    }

    #[test]
    fn derivatives() {
        let q4 = Polynomial::monomial(1.0, 4);
        assert_eq!(q4.derivative(2), p(&[0.0, 0.0, 12.0]));
        assert_eq!(q4.derivative(4), p(&[24.0]));
        assert_eq!(q4.derivative(5), Polynomial::zero());
        assert_eq!(q4.derivative(0), q4);
    }

    #[test]
    fn trailing_zeros_trimmed() {
        assert_eq!(p(&[1.0, 2.0, 0.0, 0.0]).coefficients(), &[1.0, 2.0]);
        assert!(p(&[0.0, 0.0]).is_zero());
    }

    #[test]
    fn gaussian_oracle_closed_values() {
        let q2 = Polynomial::monomial(1.0, 2);
        assert_relative_eq!(
            gaussian_moment_oracle(&q2, 0.7, 0.3).unwrap(),
            0.49 + 0.3,
            epsilon = 1e-15
        );
        let q4 = Polynomial::monomial(1.0, 4);
        assert_relative_eq!(gaussian_moment_oracle(&q4, 1.0, 1.0).unwrap(), 10.0);
        let v = p(&[0.3, -1.0, 0.5, 0.1]);
        assert_relative_eq!(
            gaussian_moment_oracle(&v, 0.4, 0.0).unwrap(),
            v.eval(0.4),
            max_relative = 1e-14
        );
    }

    #[test]
    fn harmonic_coherent_expectation() {
        let params = OscillatorParams::new(1.3, 0.7, 0.9).unwrap();
        let v = Polynomial::harmonic(params.mass, params.omega);
        let q = 0.35;
        let expected = 0.5 * 1.3 * 0.49 * q * q + 0.9 * 0.7 / 4.0;
        assert_relative_eq!(
            coherent_expectation(&v, q, &params).unwrap(),
            expected,
            epsilon = 1e-15
        );
    }

    #[test]
    fn quartic_coherent_expectation() {
        let (m, w, hb) = (1.3, 0.7, 0.9);
        let params = OscillatorParams::new(m, w, hb).unwrap();
        let v = Polynomial::monomial(1.0, 4);
        let q: f64 = -0.8;
        let expected = q.powi(4) + 3.0 * hb * q * q / (m * w) + 0.75 * hb * hb / (m * m * w * w);
        assert_relative_eq!(
            coherent_expectation(&v, q, &params).unwrap(),
            expected,
            max_relative = 1e-14
        );
    }

    #[test]
    fn macro_limit_is_exact() {
        let params = OscillatorParams::new(2.0, 3.0, 0.0).unwrap();
        let v = p(&[0.1, -0.2, 0.5, 0.0, 0.1, 0.3]);
        for q in [-2.0, 0.0, 0.5, 7.0] {
            assert_eq!(coherent_expectation(&v, q, &params).unwrap(), v.eval(q));
        }
    }

    #[test]
    fn h_osc_cases() {
        let classical = OscillatorParams::new(2.0, 1.5, 0.0).unwrap();
        let v = p(&[0.0, 0.0, 1.0, 0.0, 0.2]);
        let (q, pp) = (0.3, -1.1);
        assert_eq!(
            h_osc(q, pp, &v, &classical, false).unwrap(),
            pp * pp / 4.0 + v.eval(q)
        );
        assert_eq!(h_osc(0.0, 0.0, &v, &classical, false).unwrap(), 0.0);

        let qm = OscillatorParams::new(1.0, 1.0, 1.0).unwrap();
        let harm = Polynomial::harmonic(1.0, 1.0);
        let off = h_osc(q, pp, &harm, &qm, false).unwrap();
        assert_relative_eq!(off, pp * pp / 2.0 + 0.5 * q * q + 0.25, epsilon = 1e-15);
        let on = h_osc(q, pp, &harm, &qm, true).unwrap();
        assert_relative_eq!(on - off, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(OscillatorParams::new(0.0, 1.0, 1.0).is_err());
        assert!(OscillatorParams::new(1.0, -1.0, 1.0).is_err());
        assert!(OscillatorParams::new(1.0, 1.0, -1e-3).is_err());
        assert!(gaussian_moment_oracle(&p(&[1.0]), 0.0, -1.0).is_err());
    }

    #[test]
    fn degree_limit() {
        let v = Polynomial::monomial(1.0, MAX_DEGREE + 1);
        assert!(matches!(
            v.gaussian_smoothing(0.1),
            Err(Error::DegreeUnsupported { .. })
        ));
    }
}

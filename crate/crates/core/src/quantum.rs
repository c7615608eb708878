//! Finite-dimensional quantum layer: Hermitian operators, state vectors,
//! Pauli constructions, commutators, unitary propagators and the real
//! canonical chart `(x, y) = sqrt(2) (Re c, Im c)` of the quantum sector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{cabs, cplx, creal, Real, C};

/// Absolute Hermiticity tolerance applied at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `| |w| - 1 |` for states flagged as normalized.
pub const NORM_TOL: f64 = 1e-10;
/// Largest imaginary residue tolerated in an expectation value.
pub const IMAG_TOL: f64 = 1e-12;

fn max_abs<T: Real>(m: &DMatrix<C<T>>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(z)))
}

/// Tolerance that stays meaningful for single precision.
fn scaled_tol<T: Real>(abs: f64, scale: T) -> T {
    let eps = T::default_epsilon() * T::lit(64.0) * scale.max(T::one());
    T::lit(abs).max(eps)
}

/// A Hermitian matrix on a `dim`-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator<T: Real> {
    matrix: DMatrix<C<T>>,
}

impl<T: Real> HermitianOperator<T> {
    /// Validates squareness and Hermiticity; non-Hermitian input is rejected,
    /// never symmetrized.
    pub fn new(matrix: DMatrix<C<T>>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::Empty);
        }
        let dev = max_abs(&(&matrix - matrix.adjoint()));
        if dev > scaled_tol(HERMITIAN_TOL, max_abs(&matrix)) || !dev.is_finite() {
            return Err(Error::NotHermitian {
                deviation: dev.as_f64(),
            });
        }
        Ok(Self { matrix })
    }

    /// Builds from row-major `(re, im)` pairs.
    pub fn from_rows(rows: &[Vec<(T, T)>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            let (re, im) = rows[i][j];
            cplx(re, im)
        }))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        Self {
            matrix: DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    creal(values[i])
                } else {
                    C::default()
                }
            }),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<C<T>> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C<T>> {
        self.matrix
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    /// Multiplication by a real scalar keeps Hermiticity exactly.
    pub fn scale(&self, s: T) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * s),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: T, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            matrix: &self.matrix + other.matrix.map(|z| z * s),
        })
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// Product of two Hermitian operators. The product is Hermitian only when
    /// they commute, so the raw matrix is returned.
    pub fn mul(&self, other: &Self) -> Result<DMatrix<C<T>>> {
        self.check_dim(other.dim())?;
        Ok(&self.matrix * &other.matrix)
    }

    /// Product of commuting Hermitian operators (e.g. Paulis on distinct sites).
    pub fn mul_commuting(&self, other: &Self) -> Result<Self> {
        Self::new(self.mul(other)?)
    }

    /// `<v|A|v>` for an arbitrary (possibly unnormalized) vector. Real for
    /// Hermitian `A`; the discarded imaginary part is checked.
    pub fn quadratic_form(&self, v: &DVector<C<T>>) -> Result<T> {
        self.check_dim(v.len())?;
        let z = v.dotc(&(&self.matrix * v));
        let scale = v.norm_squared() * max_abs(&self.matrix);
        if z.im.abs() > scaled_tol(IMAG_TOL, scale) * scale.max(T::one()) {
            return Err(Error::NotHermitian {
                deviation: z.im.as_f64(),
            });
        }
        Ok(z.re)
    }

    /// `<w|A|w>` for a normalized state.
    pub fn expectation(&self, state: &QuantumState<T>) -> Result<T> {
        if !state.is_normalized() {
            return Err(Error::NotNormalized {
                norm: state.norm().as_f64(),
            });
        }
        self.quadratic_form(state.amplitudes())
    }

    /// Eigenvalues (ascending order not guaranteed) and orthonormal eigenvectors.
    pub fn eigh(&self) -> Result<(DVector<T>, DMatrix<C<T>>)> {
        let eig = SymmetricEigen::try_new(self.matrix.clone(), T::default_epsilon(), 10_000)
            .ok_or_else(|| Error::Eigen("no convergence".into()))?;
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigen("non-finite eigenvalue".into()));
        }
        Ok((eig.eigenvalues, eig.eigenvectors))
    }

    /// Smallest eigenvalue.
    pub fn ground_energy(&self) -> Result<T> {
        let (vals, _) = self.eigh()?;
        Ok(vals
            .iter()
            .copied()
            .fold(T::max_value().unwrap(), |a, b| a.min(b)))
    }

    /// `exp(-i H dt / hbar)` by spectral decomposition.
    pub fn unitary_propagator(&self, dt: T, hbar: T) -> Result<DMatrix<C<T>>> {
        if !dt.is_finite() {
            return Err(Error::InvalidParameter("dt must be finite".into()));
        }
        if !(hbar > T::zero()) {
            return Err(Error::ZeroHbar);
        }
        if dt == T::zero() {
            return Ok(DMatrix::identity(self.dim(), self.dim()));
        }
        let (vals, vecs) = self.eigh()?;
        let phases: Vec<C<T>> = vals
            .iter()
            .map(|&e| {
                let theta = -e * dt / hbar;
                cplx(theta.cos(), theta.sin())
            })
            .collect();
        let mut scaled = vecs.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        Ok(polar_correct(scaled * vecs.adjoint()))
    }
}

/// One Newton-Schulz polar step `U (3I - U^H U) / 2`, which removes the
/// O(eps) non-unitarity an eigensolver leaves behind.
fn polar_correct<T: Real>(u: DMatrix<C<T>>) -> DMatrix<C<T>> {
    let n = u.nrows();
    let correction = DMatrix::<C<T>>::identity(n, n) * creal(T::lit(3.0)) - u.adjoint() * &u;
    (&u * correction) * creal(T::lit(0.5))
}

/// `AB - BA`; anti-Hermitian for Hermitian inputs.
pub fn commutator<T: Real>(
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
) -> Result<DMatrix<C<T>>> {
    a.check_dim(b.dim())?;
    Ok(&a.matrix * &b.matrix - &b.matrix * &a.matrix)
}

/// `(1 / i hbar) <v|[A, B]|v>`, the quantum part of the hybrid bracket for
/// two expectation-value observables. Real for Hermitian `A`, `B`.
pub fn commutator_expectation<T: Real>(
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    v: &DVector<C<T>>,
    hbar: T,
) -> Result<T> {
    let comm = commutator(a, b)?;
    if comm.nrows() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: comm.nrows(),
            found: v.len(),
        });
    }
    // <v|[A,B]|v> is purely imaginary; divide by i.
    let z = v.dotc(&(comm * v));
    Ok(z.im / hbar)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

fn single_pauli<T: Real>(axis: PauliAxis) -> DMatrix<C<T>> {
    let o = C::<T>::default();
    let one = creal(T::one());
    let i = cplx(T::zero(), T::one());
    match axis {
        PauliAxis::X => DMatrix::from_row_slice(2, 2, &[o, one, one, o]),
        PauliAxis::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        PauliAxis::Z => DMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
    }
}

/// `I ⊗ … ⊗ σ_axis ⊗ … ⊗ I` with the Pauli matrix at 1-based `site`;
/// site 1 is the most significant tensor factor.
pub fn pauli<T: Real>(
    axis: PauliAxis,
    site: usize,
    n_sites: usize,
) -> Result<HermitianOperator<T>> {
    if site == 0 || site > n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    let id = DMatrix::<C<T>>::identity(2, 2);
    let mut m = DMatrix::<C<T>>::identity(1, 1);
    for s in 1..=n_sites {
        let factor = if s == site {
            single_pauli(axis)
        } else {
            id.clone()
        };
        m = m.kronecker(&factor);
    }
    Ok(HermitianOperator { matrix: m })
}

/// Complex amplitude vector of the quantum subsystem.
///
/// Normalized states satisfy `| |w| - 1 | <= 1e-10`. Unnormalized vectors are
/// only produced through [`QuantumState::unnormalized`] and are used by the
/// quadraticity diagnostics and finite-difference brackets.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState<T: Real> {
    amplitudes: DVector<C<T>>,
    normalized: bool,
}

impl<T: Real> QuantumState<T> {
    /// Accepts a vector whose norm is already within tolerance of one.
    pub fn new(amplitudes: DVector<C<T>>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty);
        }
        let norm = amplitudes.norm();
        if (norm - T::one()).abs() > scaled_tol(NORM_TOL, T::one()) || !norm.is_finite() {
            return Err(Error::NotNormalized {
                norm: norm.as_f64(),
            });
        }
        Ok(Self {
            amplitudes,
            normalized: true,
        })
    }

    /// Rescales to unit norm; rejects the zero vector.
    pub fn normalize(amplitudes: DVector<C<T>>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty);
        }
        let norm = amplitudes.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NotNormalized {
                norm: norm.as_f64(),
            });
        }
        Ok(Self {
            amplitudes: amplitudes / creal(norm),
            normalized: true,
        })
    }

    /// An explicitly unnormalized vector.
    pub fn unnormalized(amplitudes: DVector<C<T>>) -> Self {
        Self {
            amplitudes,
            normalized: false,
        }
    }

    pub fn from_pairs(pairs: &[(T, T)]) -> Result<Self> {
        Self::new(DVector::from_iterator(
            pairs.len(),
            pairs.iter().map(|&(r, i)| cplx(r, i)),
        ))
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut v = DVector::zeros(dim);
        v[index] = creal(T::one());
        Self::new(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &DVector<C<T>> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C<T>> {
        self.amplitudes
    }

    #[inline]
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> T {
        self.amplitudes.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Applies a unitary matrix. The result is rescaled to the incoming norm,
    /// which the exact map preserves; only O(eps) rounding is removed.
    pub(crate) fn apply_unitary(&self, u: &DMatrix<C<T>>) -> Self {
        let mut amplitudes = u * &self.amplitudes;
        let (before, after) = (self.amplitudes.norm(), amplitudes.norm());
        if after > T::zero() {
            amplitudes *= creal(before / after);
        }
        Self {
            amplitudes,
            normalized: self.normalized,
        }
    }

    /// Wraps amplitudes produced by an integrator, keeping the flag of `self`.
    pub(crate) fn with_amplitudes(&self, amplitudes: DVector<C<T>>) -> Self {
        Self {
            amplitudes,
            normalized: self.normalized,
        }
    }

    pub fn to_canonical(&self) -> CanonicalQuantumCoords<T> {
        let s = T::two().sqrt();
        CanonicalQuantumCoords {
            x: self.amplitudes.map(|z| z.re * s),
            y: self.amplitudes.map(|z| z.im * s),
        }
    }
}

/// Real canonical coordinates `(x_i, y_i) = sqrt(2) (Re c_i, Im c_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalQuantumCoords<T: Real> {
    pub x: DVector<T>,
    pub y: DVector<T>,
}

impl<T: Real> CanonicalQuantumCoords<T> {
    pub fn new(x: DVector<T>, y: DVector<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Raw amplitudes `c_i = (x_i + i y_i) / sqrt(2)`, without any norm check.
    pub fn amplitudes(&self) -> DVector<C<T>> {
        let s = T::two().sqrt();
        DVector::from_fn(self.x.len(), |i, _| cplx(self.x[i] / s, self.y[i] / s))
    }

    /// Inverse chart. Produces a normalized state when the coordinates lie on
    /// the sphere `sum x^2 + y^2 = 2`, an unnormalized one otherwise.
    pub fn to_state(&self) -> QuantumState<T> {
        let amps = self.amplitudes();
        match QuantumState::new(amps.clone()) {
            Ok(s) => s,
            Err(_) => QuantumState::unnormalized(amps),
        }
    }
}

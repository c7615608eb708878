//! Liouville evolution of hybrid densities by the method of characteristics:
//! initial densities are sampled, every sample follows the Hamiltonian flow,
//! and observable moments are estimated over the evolved samples.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bracket::StateFunction;
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig, TrajectoryRecord};
use crate::model::{ClassicalPoint, HybridHamiltonianSpec, HybridState};
use crate::quantum::QuantumState;
use crate::scalar::Real;

const DENSITY_TOL: f64 = 1e-12;

/// Classical factor of the density.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassicalSampler<T: Real> {
    /// Point mass.
    Delta(ClassicalPoint<T>),
    /// Gaussian with a `2k x 2k` covariance ordered `(q_1..q_k, p_1..p_k)`.
    Gaussian {
        mean: ClassicalPoint<T>,
        covariance: DMatrix<T>,
    },
    /// Uniform draw from user-supplied points.
    Empirical(Vec<ClassicalPoint<T>>),
}

/// Quantum factor of the density.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumSampler<T: Real> {
    Pure(QuantumState<T>),
    /// Finite mixture `(weight, state)`; weights are non-negative and sum to 1.
    Mixture(Vec<(T, QuantumState<T>)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridDensitySpec<T: Real> {
    pub classical: ClassicalSampler<T>,
    pub quantum: QuantumSampler<T>,
}

impl<T: Real> HybridDensitySpec<T> {
    pub fn dofs(&self) -> usize {
        match &self.classical {
            ClassicalSampler::Delta(p) => p.dofs(),
            ClassicalSampler::Gaussian { mean, .. } => mean.dofs(),
            ClassicalSampler::Empirical(points) => points.first().map_or(0, |p| p.dofs()),
        }
    }

    pub fn quantum_dim(&self) -> usize {
        match &self.quantum {
            QuantumSampler::Pure(w) => w.dim(),
            QuantumSampler::Mixture(c) => c.first().map_or(0, |(_, w)| w.dim()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidDensity(m.into()));
        let k = self.dofs();
        if k == 0 {
            return bad("classical sampler has no degrees of freedom");
        }
        match &self.classical {
            ClassicalSampler::Delta(_) => {}
            ClassicalSampler::Gaussian { covariance, .. } => {
                if covariance.shape() != (2 * k, 2 * k) {
                    return bad("covariance must be 2k x 2k");
                }
                let scale = covariance.iter().fold(T::one(), |m, x| m.max(x.abs()));
                let tol = T::lit(DENSITY_TOL) * scale;
                if covariance.iter().any(|x| !x.is_finite()) {
                    return bad("covariance must be finite");
                }
                if (covariance - covariance.transpose())
                    .iter()
                    .any(|x| x.abs() > tol)
                {
                    return bad("covariance must be symmetric");
                }
                let eig = SymmetricEigen::new(covariance.clone());
                if eig.eigenvalues.iter().any(|&l| l < -tol) {
                    return bad("covariance must be positive semidefinite");
                }
            }
            ClassicalSampler::Empirical(points) => {
                if points.iter().any(|p| p.dofs() != k || !p.is_finite()) {
                    return bad("empirical points must share the degree-of-freedom count");
                }
            }
        }
        let d = self.quantum_dim();
        match &self.quantum {
            QuantumSampler::Pure(w) => {
                if !w.is_normalized() {
                    return bad("pure state must be normalized");
                }
            }
            QuantumSampler::Mixture(components) => {
                if components.is_empty() {
                    return bad("mixture needs at least one component");
                }
                let mut total = T::zero();
                for (wgt, w) in components {
                    if !(*wgt >= T::zero()) {
                        return bad("mixture weights must be non-negative");
                    }
                    if !w.is_normalized() || w.dim() != d {
                        return bad("mixture states must be normalized and share a dimension");
                    }
                    total += *wgt;
                }
                if (total - T::one()).abs()
                    > T::lit(DENSITY_TOL).max(T::default_epsilon() * T::lit(64.0))
                {
                    return bad("mixture weights must sum to 1");
                }
            }
        }
        Ok(())
    }
}

fn gaussian_factor<T: Real>(cov: &DMatrix<T>) -> DMatrix<T> {
    let eig = SymmetricEigen::new(cov.clone());
    let mut v = eig.eigenvectors;
    for (j, mut col) in v.column_iter_mut().enumerate() {
        col *= eig.eigenvalues[j].max(T::zero()).sqrt();
    }
    v
}

/// `n` i.i.d. samples; identical for identical `(density, n, seed)`.
pub fn sample<T: Real>(
    density: &HybridDensitySpec<T>,
    n: usize,
    seed: u64,
) -> Result<Vec<HybridState<T>>> {
    density.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factor = match &density.classical {
        ClassicalSampler::Gaussian { covariance, .. } => Some(gaussian_factor(covariance)),
        _ => None,
    };
    let k = density.dofs();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let classical = match &density.classical {
            ClassicalSampler::Delta(p) => p.clone(),
            ClassicalSampler::Gaussian { mean, .. } => {
                let l = factor.as_ref().expect("factor computed for gaussian");
                let z =
                    DVector::from_fn(2 * k, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
                let x = l * z;
                ClassicalPoint {
                    q: (0..k).map(|i| mean.q[i] + x[i]).collect(),
                    p: (0..k).map(|i| mean.p[i] + x[k + i]).collect(),
                }
            }
            ClassicalSampler::Empirical(points) => {
                points[rng.random_range(0..points.len())].clone()
            }
        };
        let omega = match &density.quantum {
            QuantumSampler::Pure(w) => w.clone(),
            QuantumSampler::Mixture(components) => {
                let u = T::lit(rng.random::<f64>());
                let mut acc = T::zero();
                let mut chosen = &components[components.len() - 1].1;
                for (wgt, w) in components {
                    acc += *wgt;
                    if u < acc {
                        chosen = w;
                        break;
                    }
                }
                chosen.clone()
            }
        };
        out.push(HybridState::new(classical, omega));
    }
    Ok(out)
}

/// Evolves every sample along its characteristic. Runs on the current rayon
/// pool; results are ordered by sample index.
pub fn evolve_ensemble<T: Real>(
    spec: &HybridHamiltonianSpec<T>,
    samples: &[HybridState<T>],
    config: &IntegratorConfig<T>,
) -> Result<Vec<TrajectoryRecord<T>>> {
    config.steps()?;
    samples
        .par_iter()
        .map(|s| integrate(spec, s, config, &[]))
        .collect()
}

/// Per-time sample mean and standard error of one observable.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult<T: Real> {
    pub times: Vec<T>,
    pub mean: Vec<T>,
    pub stderr: Vec<T>,
    pub sample_count: usize,
    /// Set when a single sample makes the standard error meaningless
    /// (reported as 0).
    pub degenerate: bool,
}

pub fn estimate_observable<T: Real>(
    trajectories: &[TrajectoryRecord<T>],
    f: &dyn StateFunction<T>,
) -> Result<EnsembleResult<T>> {
    let first = trajectories.first().ok_or(Error::Empty)?;
    if trajectories.iter().any(|t| t.times != first.times) {
        return Err(Error::MisalignedGrids);
    }
    let n = trajectories.len();
    let nf = T::from_count(n);
    let mut mean = Vec::with_capacity(first.len());
    let mut stderr = Vec::with_capacity(first.len());
    let mut values = vec![T::zero(); n];
    for r in 0..first.len() {
        for (v, t) in values.iter_mut().zip(trajectories) {
            *v = f.eval(&t.states[r])?;
        }
        // shifted by the first sample so identical samples reproduce it exactly
        let v0 = values[0];
        let m = v0 + values.iter().fold(T::zero(), |a, &v| a + (v - v0)) / nf;
        let se = if n > 1 {
            let var =
                values.iter().fold(T::zero(), |a, &v| a + (v - m) * (v - m)) / T::from_count(n - 1);
            (var / nf).sqrt()
        } else {
            T::zero()
        };
        mean.push(m);
        stderr.push(se);
    }
    Ok(EnsembleResult {
        times: first.times.clone(),
        mean,
        stderr,
        sample_count: n,
        degenerate: n == 1,
    })
}

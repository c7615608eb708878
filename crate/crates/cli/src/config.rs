//! JSON configuration documents.
//!
//! Complex matrices are nested arrays of `[re, im]` pairs, polynomials are
//! coefficient arrays in ascending order and phase-space coefficients are
//! monomial lists. Unknown fields are rejected everywhere.

use std::path::Path;

use hybridsim_core::bracket::{HybridObservable, Monomial, PhasePolynomial};
use hybridsim_core::ensemble::{ClassicalSampler, HybridDensitySpec, QuantumSampler};
use hybridsim_core::integrator::{IntegratorConfig, Method};
use hybridsim_core::model::{
    ClassicalPoint, ClassicalSector, CouplingTerm, HybridHamiltonianSpec, HybridState,
    ReferenceModel,
};
use hybridsim_core::potential::{OscillatorParams, Polynomial};
use hybridsim_core::quantum::{pauli, HermitianOperator, PauliAxis, QuantumState};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Deviation of `|w0|` from 1 above which loading warns.
pub const RENORMALIZE_WARN: f64 = 1e-6;

pub type Pair = [f64; 2];
pub type MatrixConfig = Vec<Vec<Pair>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub initial: InitialConfig,
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<ObservableConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// The two-qubit oscillator model with named parameters.
    Reference(ReferenceConfig),
    General(GeneralModelConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub epsilon: f64,
    pub mu: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub potential: Vec<f64>,
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    #[serde(default)]
    pub lambda2_on_first_qubit: bool,
    #[serde(default)]
    pub include_kinetic_fluctuation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralModelConfig {
    pub h0: OperatorConfig,
    #[serde(default)]
    pub couplings: Vec<CouplingConfig>,
    pub potential: Vec<f64>,
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    #[serde(default = "one")]
    pub dofs: usize,
    #[serde(default)]
    pub include_kinetic_fluctuation: bool,
}

fn one() -> usize {
    1
}

/// `prod_i coefficient[i](q_i) * operator`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub coefficient: Vec<Vec<f64>>,
    pub operator: OperatorConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorConfig {
    Matrix(MatrixConfig),
    Pauli { pauli: PauliConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliConfig {
    pub axis: AxisConfig,
    /// 1-based site index.
    pub site: usize,
    pub sites: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisConfig {
    X,
    Y,
    Z,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub omega: Vec<Pair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: Method,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "one")]
    pub output_stride: usize,
    #[serde(default)]
    pub renormalize: bool,
    #[serde(default)]
    pub gauge_phase: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<ObservableTermConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classical: Vec<Monomial<f64>>,
}

/// `coefficient(q, p) <w|operator|w>`; a missing coefficient means 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableTermConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<Vec<Monomial<f64>>>,
    pub operator: OperatorConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
}

/// Density document for the `ensemble` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub classical: ClassicalDensityConfig,
    pub quantum: QuantumDensityConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassicalDensityConfig {
    Delta(PointConfig),
    /// Covariance rows ordered `(q_1..q_k, p_1..p_k)`.
    Gaussian {
        mean: PointConfig,
        covariance: Vec<Vec<f64>>,
    },
    Empirical(Vec<PointConfig>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum QuantumDensityConfig {
    Pure(Vec<Pair>),
    Mixture(Vec<MixtureComponent>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub state: Vec<Pair>,
}

/// Validated configuration ready for computation.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub spec: HybridHamiltonianSpec<f64>,
    pub initial: HybridState<f64>,
    pub integrator: IntegratorConfig<f64>,
    pub observables: Vec<(String, HybridObservable<f64>)>,
    pub output: Option<String>,
    /// `| |w0| - 1 |` before renormalization.
    pub renormalization: f64,
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn to_matrix(m: &MatrixConfig) -> Result<DMatrix<Complex64>, String> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(format!(
            "operator matrix must be square and non-empty ({n} rows)"
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(m[i][j][0], m[i][j][1])
    }))
}

pub fn from_matrix(m: &DMatrix<Complex64>) -> MatrixConfig {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

impl OperatorConfig {
    pub fn build(&self) -> Result<HermitianOperator<f64>, CliError> {
        match self {
            OperatorConfig::Matrix(m) => {
                HermitianOperator::new(to_matrix(m).map_err(CliError::Validation)?)
                    .map_err(validation)
            }
            OperatorConfig::Pauli { pauli: p } => {
                let axis = match p.axis {
                    AxisConfig::X => PauliAxis::X,
                    AxisConfig::Y => PauliAxis::Y,
                    AxisConfig::Z => PauliAxis::Z,
                };
                pauli(axis, p.site, p.sites).map_err(validation)
            }
        }
    }
}

fn to_vector(v: &[Pair]) -> DVector<Complex64> {
    DVector::from_iterator(v.len(), v.iter().map(|&[re, im]| Complex64::new(re, im)))
}

fn from_vector(v: &DVector<Complex64>) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl From<&ReferenceModel<f64>> for ReferenceConfig {
    fn from(m: &ReferenceModel<f64>) -> Self {
        Self {
            epsilon: m.epsilon,
            mu: m.mu,
            lambda1: m.lambda1,
            lambda2: m.lambda2,
            potential: m.potential.coefficients().to_vec(),
            mass: m.params.mass,
            omega: m.params.omega,
            hbar: m.params.hbar,
            lambda2_on_first_qubit: m.lambda2_on_first_qubit,
            include_kinetic_fluctuation: false,
        }
    }
}

impl ReferenceConfig {
    pub fn model(&self) -> ReferenceModel<f64> {
        ReferenceModel {
            epsilon: self.epsilon,
            mu: self.mu,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            potential: Polynomial::new(self.potential.clone()),
            params: OscillatorParams {
                mass: self.mass,
                omega: self.omega,
                hbar: self.hbar,
            },
            lambda2_on_first_qubit: self.lambda2_on_first_qubit,
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<HybridHamiltonianSpec<f64>, CliError> {
        match self {
            ModelConfig::Reference(r) => Ok(r
                .model()
                .to_spec()
                .map_err(validation)?
                .with_kinetic_fluctuation(r.include_kinetic_fluctuation)),
            ModelConfig::General(g) => {
                let params = OscillatorParams::new(g.mass, g.omega, g.hbar).map_err(validation)?;
                let couplings = g
                    .couplings
                    .iter()
                    .map(|c| {
                        Ok(CouplingTerm {
                            coefficient: c
                                .coefficient
                                .iter()
                                .map(|f| Polynomial::new(f.clone()))
                                .collect(),
                            operator: c.operator.build()?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                let classical = ClassicalSector {
                    potential: Polynomial::new(g.potential.clone()),
                    params,
                    dofs: g.dofs,
                };
                Ok(
                    HybridHamiltonianSpec::new(g.h0.build()?, couplings, classical)
                        .map_err(validation)?
                        .with_kinetic_fluctuation(g.include_kinetic_fluctuation),
                )
            }
        }
    }
}

impl ObservableConfig {
    pub fn build(
        &self,
        dofs: usize,
        quantum_dim: usize,
    ) -> Result<HybridObservable<f64>, CliError> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let c = match &t.coefficient {
                    Some(m) => PhasePolynomial::from_monomials(dofs, m).map_err(validation)?,
                    None => PhasePolynomial::constant(dofs, 1.0),
                };
                Ok((c, t.operator.build()?))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let classical =
            PhasePolynomial::from_monomials(dofs, &self.classical).map_err(validation)?;
        HybridObservable::new(dofs, quantum_dim, terms, classical)
            .map_err(|e| CliError::Validation(format!("observable {}: {e}", self.name)))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }

    pub fn validate(&self) -> Result<Loaded, CliError> {
        let spec = self.model.build()?;
        let point = ClassicalPoint::new(self.initial.q.clone(), self.initial.p.clone())
            .map_err(validation)?;
        if point.dofs() != spec.dofs() || !point.is_finite() {
            return Err(CliError::Validation(format!(
                "initial point must have {} finite (q, p) pairs",
                spec.dofs()
            )));
        }
        let raw = to_vector(&self.initial.omega);
        if raw.len() != spec.quantum_dim() {
            return Err(CliError::Validation(format!(
                "initial omega has {} amplitudes, model needs {}",
                raw.len(),
                spec.quantum_dim()
            )));
        }
        let norm = raw.norm();
        // already-normalized input is kept bit-for-bit
        let omega = match QuantumState::new(raw.clone()) {
            Ok(w) => w,
            Err(_) => QuantumState::normalize(raw).map_err(validation)?,
        };
        let integrator = IntegratorConfig {
            method: self.integrator.method,
            dt: self.integrator.dt,
            t_final: self.integrator.t_final,
            output_stride: self.integrator.output_stride,
            renormalize: self.integrator.renormalize,
            gauge_phase: self.integrator.gauge_phase,
        };
        integrator.steps().map_err(validation)?;
        let mut names = std::collections::BTreeSet::new();
        let observables = self
            .observables
            .iter()
            .map(|o| {
                if o.name.is_empty()
                    || o.name.contains([',', '"', '\n'])
                    || !names.insert(o.name.clone())
                {
                    return Err(CliError::Validation(format!(
                        "invalid or duplicate observable name {:?}",
                        o.name
                    )));
                }
                Ok((o.name.clone(), o.build(spec.dofs(), spec.quantum_dim())?))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Loaded {
            initial: HybridState::new(point, omega),
            spec,
            integrator,
            observables,
            output: self.output.as_ref().and_then(|o| o.path.clone()),
            renormalization: (norm - 1.0).abs(),
        })
    }
}

impl DensityConfig {
    pub fn build(&self) -> Result<HybridDensitySpec<f64>, CliError> {
        let invalid = |e: hybridsim_core::Error| match e {
            hybridsim_core::Error::InvalidDensity(m) => CliError::Density(m),
            other => CliError::Density(other.to_string()),
        };
        let point =
            |p: &PointConfig| ClassicalPoint::new(p.q.clone(), p.p.clone()).map_err(invalid);
        let state = |s: &[Pair]| QuantumState::new(to_vector(s)).map_err(invalid);
        let classical = match &self.classical {
            ClassicalDensityConfig::Delta(p) => ClassicalSampler::Delta(point(p)?),
            ClassicalDensityConfig::Gaussian { mean, covariance } => {
                let n = covariance.len();
                if covariance.iter().any(|r| r.len() != n) {
                    return Err(CliError::Density("covariance must be square".into()));
                }
                ClassicalSampler::Gaussian {
                    mean: point(mean)?,
                    covariance: DMatrix::from_fn(n, n, |i, j| covariance[i][j]),
                }
            }
            ClassicalDensityConfig::Empirical(ps) => {
                ClassicalSampler::Empirical(ps.iter().map(point).collect::<Result<_, _>>()?)
            }
        };
        let quantum = match &self.quantum {
            QuantumDensityConfig::Pure(s) => QuantumSampler::Pure(state(s)?),
            QuantumDensityConfig::Mixture(cs) => QuantumSampler::Mixture(
                cs.iter()
                    .map(|c| Ok((c.weight, state(&c.state)?)))
                    .collect::<Result<_, CliError>>()?,
            ),
        };
        let density = HybridDensitySpec { classical, quantum };
        density.validate().map_err(invalid)?;
        Ok(density)
    }
}

impl RunConfig {
    /// Reference model started at `(q, p, w0)` with the given integrator.
    pub fn reference(
        model: &ReferenceModel<f64>,
        q: f64,
        p: f64,
        omega: &DVector<Complex64>,
        integrator: IntegratorSection,
    ) -> Self {
        Self {
            model: ModelConfig::Reference(model.into()),
            initial: InitialConfig {
                q: vec![q],
                p: vec![p],
                omega: from_vector(omega),
            },
            integrator,
            observables: Vec::new(),
            output: None,
        }
    }
}

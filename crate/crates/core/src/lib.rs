//! Hybrid quantum-classical dynamics on the manifold of states whose
//! classical sector is a minimal-uncertainty coherent state.
//!
//! The reduced chart is `(q, p, w)`: canonical pairs of the classical sector
//! plus the state vector of the quantum sector. The crate provides the model
//! and its equations of motion, the hybrid Poisson bracket, fixed-step
//! integrators, a characteristics-based Liouville ensemble and an independent
//! verifier in the full (Fock ⊗ quantum) Hilbert space.
//!
//! All numerical types are generic over [`Real`] (`f32` or `f64`); the
//! double-precision aliases below are what applications normally use.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bracket;
pub mod ensemble;
pub mod error;
pub mod fullspace;
pub mod integrator;
pub mod model;
pub mod potential;
pub mod quantum;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type HermitianOperator = quantum::HermitianOperator<f64>;
pub type QuantumState = quantum::QuantumState<f64>;
pub type CanonicalQuantumCoords = quantum::CanonicalQuantumCoords<f64>;
pub type Polynomial = potential::Polynomial<f64>;
pub type PhasePolynomial = bracket::PhasePolynomial<f64>;
pub type HybridObservable = bracket::HybridObservable<f64>;
pub type IntegratorConfig = integrator::IntegratorConfig<f64>;
pub type TrajectoryRecord = integrator::TrajectoryRecord<f64>;
pub type OscillatorParams = potential::OscillatorParams<f64>;
pub type ClassicalPoint = model::ClassicalPoint<f64>;
pub type CouplingTerm = model::CouplingTerm<f64>;
pub type HybridHamiltonianSpec = model::HybridHamiltonianSpec<f64>;
pub type HybridState = model::HybridState<f64>;
pub type ReferenceModel = model::ReferenceModel<f64>;
pub type HybridDensitySpec = ensemble::HybridDensitySpec<f64>;
pub type EnsembleResult = ensemble::EnsembleResult<f64>;
pub type FockSpace = fullspace::FockSpace<f64>;
pub type CompositeState = fullspace::CompositeState<f64>;

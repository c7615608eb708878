use thiserror::Error;

/// Errors raised by model construction and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |A - A^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("empty operator or state")]
    Empty,

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("polynomial degree {degree} exceeds the supported maximum {max}")]
    DegreeUnsupported { degree: usize, max: usize },

    #[error("quantum dynamics requires hbar > 0")]
    ZeroHbar,

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("non-finite state encountered at step {step}")]
    NonFinite { step: usize },

    #[error("Fock truncation at {levels} levels is inadequate (tail weight {tail:e}); try at least {suggested} levels")]
    TruncationInadequate {
        levels: usize,
        tail: f64,
        suggested: usize,
    },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("trajectories have misaligned time grids")]
    MisalignedGrids,

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

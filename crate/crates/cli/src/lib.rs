//! Library side of the `hybridsim` command-line tool: configuration schema,
//! subcommand implementations and output helpers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

/// Top-level failure with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical abort at step {step}: {message}")]
    Numerical { step: usize, message: String },
    #[error("Fock truncation N={levels} inadequate (tail weight {tail:.3e}); rerun with --levels {suggested}")]
    Truncation {
        levels: usize,
        tail: f64,
        suggested: usize,
    },
    #[error("invalid density: {0}")]
    Density(String),
    #[error("i/o error: {0}")]
    Io(String),
    /// A check reported FAIL; details were already printed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Truncation { .. } => 4,
            CliError::Density(_) => 5,
            CliError::Failed(_) => 6,
        }
    }
}

impl From<hybridsim_core::Error> for CliError {
    fn from(e: hybridsim_core::Error) -> Self {
        use hybridsim_core::Error as E;
        match e {
            E::NonFinite { step } => CliError::Numerical {
                step,
                message: "non-finite state".into(),
            },
            E::TruncationInadequate {
                levels,
                tail,
                suggested,
            } => CliError::Truncation {
                levels,
                tail,
                suggested,
            },
            E::InvalidDensity(m) => CliError::Density(m),
            E::Eigen(m) => CliError::Numerical {
                step: 0,
                message: m,
            },
            other => CliError::Validation(other.to_string()),
        }
    }
}

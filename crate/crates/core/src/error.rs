use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Variants fall into two families: validation problems with the inputs
/// ([`Error::is_validation`]) and numerical failures during a computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error(
        "natural frequencies {omega_a} (mode {mode_a}) and {omega_b} (mode {mode_b}) are not distinct"
    )]
    DistinctFrequencyViolation {
        mode_a: usize,
        mode_b: usize,
        omega_a: f64,
        omega_b: f64,
    },

    #[error("dominant mode {mode} of node {node} is the rigid-like mode with frequency 1")]
    DominantModeIsRigid { node: usize, mode: usize },

    #[error("operation not available in the {0} damping regime")]
    UnsupportedRegime(&'static str),

    #[error("no trigger threshold: 8*delta = {lhs} >= p^2*eta = {rhs}")]
    NoThreshold { lhs: f64, rhs: f64 },

    #[error("forcing is orthogonal to the dominant mode; trigger time is infinite")]
    InfiniteTriggerTime,

    #[error("no saddle equilibrium exists (delta = {delta} exceeds {limit})")]
    NoSaddle { delta: f64, limit: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("integration diverged; last finite state at t = {last_good_time}")]
    IntegrationDiverged { last_good_time: f64 },

    #[error("cannot seed periodic orbit: {0}")]
    SeedFailure(String),

    #[error("continuation stalled at parameter {parameter} (step below {min_step:e})")]
    BranchStalled { parameter: f64, min_step: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or out-of-range inputs.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidNetwork(_) | Error::Config { .. } | Error::UnsupportedRegime(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

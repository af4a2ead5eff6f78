use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("parameter domain: {0}")]
    ParameterDomain(String),

    #[error("fundamental solutions did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("quadrature did not converge before u = {bound:e} (last panel {last:e}, accumulated {accumulated:e})")]
    QuadratureNonconvergence {
        bound: f64,
        last: f64,
        accumulated: f64,
    },

    #[error("x = {x} is a kink of the payoff; use one-sided derivatives and jump terms")]
    KinkPoint { x: f64 },

    #[error("transform is not strictly increasing at node {index} (y = {y_prev} then {y})")]
    MonotonicityViolation { index: usize, y_prev: f64, y: f64 },

    #[error("obstacles inconsistent at node {index}: H1 = {h1} > H2 = {h2}")]
    InconsistentObstacles { index: usize, h1: f64, h2: f64 },

    #[error("envelope iteration did not converge in {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("value leaves the obstacle sandwich at x = {x}: g1 = {g1}, V = {v}, g2 = {g2}")]
    SandwichViolation { x: f64, g1: f64, v: f64, g2: f64 },

    #[error("chain oracle runs disagree by {max_diff:e}")]
    OracleMismatch { max_diff: f64 },

    #[error("payoff: {0}")]
    Payoff(String),

    #[error("grid: {0}")]
    Grid(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("monte carlo parameters: {0}")]
    MonteCarlo(String),

    #[error("probe found {} violation(s)", .0.violations.len())]
    ProbeViolation(Box<crate::simulate::ProbeReport>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

impl Error {
    /// Process exit status: 1 for bad input, 2 for numerical failure, 3 for
    /// a failed check.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidParameter { .. }
            | Error::ParameterDomain(_)
            | Error::KinkPoint { .. }
            | Error::Payoff(_)
            | Error::Grid(_)
            | Error::Config { .. }
            | Error::Io { .. } => 1,
            Error::ConvergenceFailure(_)
            | Error::QuadratureNonconvergence { .. }
            | Error::MonotonicityViolation { .. }
            | Error::InconsistentObstacles { .. }
            | Error::NonConvergence { .. }
            | Error::OracleMismatch { .. }
            | Error::MonteCarlo(_) => 2,
            Error::SandwichViolation { .. } | Error::ProbeViolation(_) => 3,
        }
    }
}

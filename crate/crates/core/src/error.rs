use std::path::PathBuf;

use thiserror::Error;

use crate::potential::PotentialReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("constraint error: {0}")]
    Constraint(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("Kacanov iteration did not converge after {} iterations (increment {:e}, residual {:e})", .report.iterations, .report.increment, .report.residual)]
    Nonconvergence { report: Box<PotentialReport> },

    #[error("coupling fixed point did not converge after {} iterations (last change {:e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    CouplingDivergence { history: Vec<f64> },

    #[error("simulation failed at step {step}: {source}")]
    Simulation {
        step: usize,
        partial: Box<crate::coupling::Trajectory>,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration:\n{}", crate::config::format_issues(.issues))]
    Parse { issues: Vec<crate::config::ConfigIssue> },

    #[error("structural hypothesis violated: {0}")]
    Structural(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

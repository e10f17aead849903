use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SystemState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent configuration input.
    #[error("configuration error{}: {message}", line_suffix(*line))]
    Config { line: Option<usize>, message: String },

    /// An argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method failed to converge.
    #[error("numeric error: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    /// Positivity could not be restored by step halving.
    #[error("stiff failure at t={t}: dt fell below {dt_min:e} ({component} negative at node {node})")]
    StiffFailure {
        t: f64,
        dt_min: f64,
        component: &'static str,
        node: usize,
    },

    #[error("non-finite value in {component} at node {node}, t={}", state.t)]
    NonFinite {
        component: &'static str,
        node: usize,
        state: Box<SystemState>,
    },

    /// Mandatory assumption checks failed and the override flag was not set.
    #[error("initial data rejected: {0}")]
    Assumptions(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid adjacency: {0}")]
    InvalidAdjacency(String),

    /// `zone` is 0-based; the message numbers zones from 1 like the CSV output.
    #[error("zone {}: local problem {status}", zone + 1)]
    ZoneSolve { zone: usize, status: String },

    #[error("solver returned {status}")]
    Solve { status: String },

    #[error("missing plan for zone {0}")]
    MissingPlan(usize),

    #[error("priority assignment: {0}")]
    Priority(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("alpha = {alpha}: {source}")]
    AtAlpha {
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_alpha(self, alpha: f64) -> Self {
        Error::AtAlpha {
            alpha,
            source: Box::new(self),
        }
    }

    /// True when the error (or its cause) is a solver failure rather than bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::ZoneSolve { .. } | Error::Solve { .. } => true,
            Error::AtStep { source, .. } | Error::AtAlpha { source, .. } => {
                source.is_solver_failure()
            }
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

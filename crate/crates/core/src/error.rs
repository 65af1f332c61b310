use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The requested placement does not fit on the orthogonality grid.
    #[error("infeasible placement: {0}")]
    Infeasible(String),

    /// The grid-search oracle refuses problems whose simplex grid is too large.
    #[error("oracle infeasible: {0}")]
    OracleInfeasible(String),

    /// A scenario file failed validation; `path` is the JSON path of the first violation.
    #[error("invalid config at `{path}`: {message}")]
    InvalidConfig { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig { .. }
            | Error::InvalidInput(_)
            | Error::DegenerateGeometry(_)
            | Error::DimensionMismatch { .. } => 2,
            Error::Infeasible(_) => 3,
            Error::OracleInfeasible(_) | Error::Io(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

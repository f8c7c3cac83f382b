use equiflex_conic::ConicError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {what}: {msg}")]
    Parse { what: String, msg: String },
    #[error("invalid case: {0}")]
    Validation(String),
    #[error("invalid per-unit base: {0}")]
    Base(String),
    #[error("invalid DER portfolio: {0}")]
    Portfolio(String),
    #[error("storage unit {unit} cannot reach {need} kWh: {reason}")]
    Unreachable { unit: String, need: f64, reason: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("missing stage-1 value for {0}")]
    MissingStageOne(String),
    #[error("invalid actor table: {0}")]
    Actors(String),
    #[error("market infeasible; violated: {}", tags.join(", "))]
    Infeasible { tags: Vec<String> },
    #[error("solver stopped at a limit: {0}")]
    SolverLimit(String),
    #[error(transparent)]
    Conic(ConicError),
    #[error("price adjustment broke revenue neutrality at bus {bus}, t={t} (relative error {err:e})")]
    Neutrality { bus: usize, t: usize, err: f64 },
    #[error("oracle: {0}")]
    Oracle(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("missing artifact {0}; run the earlier stage first")]
    MissingArtifact(String),
    #[error("cannot write {path}: {msg}")]
    Output { path: String, msg: String },
}

impl Error {
    /// Process exit code: 2 infeasible or invalid input, 3 solver limit,
    /// 4 missing artifacts, 1 anything else (I/O, numerical trouble).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::Base(_)
            | Error::Portfolio(_)
            | Error::Unreachable { .. }
            | Error::Dimension(_)
            | Error::Actors(_)
            | Error::Infeasible { .. }
            | Error::Neutrality { .. } => 2,
            Error::SolverLimit(_) => 3,
            Error::MissingArtifact(_) => 4,
            _ => 1,
        }
    }
}

impl From<ConicError> for Error {
    fn from(e: ConicError) -> Self {
        match e {
            ConicError::Infeasible { tags } => Error::Infeasible { tags },
            ConicError::IterationLimit(n) => Error::SolverLimit(format!("iteration limit after {n} iterations")),
            ConicError::NodeLimit(n) => Error::SolverLimit(format!("node limit {n} reached without an incumbent")),
            other => Error::Conic(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ConicError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConicError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("duplicate constraint tag `{0}`")]
    DuplicateTag(String),
    #[error("invalid label `{0}`: labels must be non-empty and contain no whitespace")]
    InvalidLabel(String),
    #[error("variable `{name}` has inverted bounds [{lower}, {upper}]")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("binary variable `{name}` has bounds [{lower}, {upper}] outside [0, 1]")]
    BinaryBounds { name: String, lower: f64, upper: f64 },
    #[error("reference to undeclared variable id {0}")]
    UnknownVariable(usize),
    #[error("constraint `{0}` has no nonzero coefficient")]
    EmptyConstraint(String),
    #[error("cone `{tag}` has dimension {dim}, below the minimum {min}")]
    ConeDimension { tag: String, dim: usize, min: usize },
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
    #[error("program is infeasible; certificate touches {} constraint(s): {}", .tags.len(), .tags.join(", "))]
    Infeasible { tags: Vec<String> },
    #[error("program is unbounded")]
    Unbounded,
    #[error("solver stopped at the iteration limit after {0} iterations")]
    IterationLimit(u32),
    #[error("solver reported a numerical failure: {0}")]
    Numerical(String),
    #[error("branch-and-bound node limit of {0} reached without a feasible incumbent")]
    NodeLimit(usize),
    #[error("binary assignment does not cover variable `{0}`")]
    IncompleteAssignment(String),
    #[error("variable `{0}` is not binary")]
    NotBinary(String),
    #[error("too many binaries for enumeration: {found} > {limit}")]
    TooManyBinaries { found: usize, limit: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

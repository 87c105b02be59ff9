use thiserror::Error;

/// Structural problems with an [`crate::LpModel`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable `{var}` (#{index}) has invalid bounds [{lower}, {upper}]")]
    InvalidBounds {
        var: String,
        index: usize,
        lower: f64,
        upper: f64,
    },
    #[error("coefficient references unknown row #{row}")]
    DanglingRow { row: usize },
    #[error("coefficient references unknown variable #{var}")]
    DanglingVar { var: usize },
    #[error("non-finite value in {what}")]
    NonFinite { what: String },
}

/// Failures of a solve call. Infeasibility and unboundedness are not errors;
/// they are reported through [`crate::Status`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error("numerical breakdown after {iterations} iterations: {reason}")]
    NumericalBreakdown { iterations: usize, reason: String },
    #[error("warm-start basis has {got} entries, model has {expected} variables and rows")]
    BasisMismatch { expected: usize, got: usize },
}

/// Errors while reading or writing MPS files.
#[derive(Debug, Error)]
pub enum MpsError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// State indices inside error payloads are 0-based, matching the library API.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {row} has {cols} entries")]
    NotSquare { rows: usize, row: usize, cols: usize },

    #[error("matrix must have at least one row")]
    Empty,

    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("entry ({row}, {col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, outside tolerance {tol} of 1")]
    RowSumOutOfTolerance { row: usize, sum: f64, tol: f64 },

    #[error("row {row} sums to {sum}, which exceeds 1 by more than {tol}")]
    RowSumExceedsOne { row: usize, sum: f64, tol: f64 },

    #[error("matrix is reducible; strongly connected components: {}", format_components(.components))]
    Reducible { components: Vec<Vec<usize>> },

    #[error("matrix is numerically singular: pivot {pivot:e} below threshold {threshold:e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("states i and j must differ (both are {0})")]
    SameIndex(usize),

    #[error("probability {value} at state {state} lies outside [0, 1]")]
    ProbabilityOutOfRange { state: usize, value: f64 },

    #[error("S_small is not dominated by S_big at ({row}, {col})")]
    NotDominated { row: usize, col: usize },

    #[error("{which} has entry ({row}, {col}) = {value} below S = {lower}")]
    DominationViolated {
        which: &'static str,
        row: usize,
        col: usize,
        value: f64,
        lower: f64,
    },

    #[error("sensitivities were computed for a different lower envelope S")]
    EnvelopeMismatch,

    #[error("row {row} of S has no slack; every stochastic F >= S agrees on that row")]
    NoSlack { row: usize },

    #[error("eta = {eta} must lie in (0, {slack})")]
    EtaTooLarge { eta: f64, slack: f64 },

    #[error("sample count must be at least 1")]
    ZeroSamples,

    #[error("trajectory exceeded the cap of {cap} steps")]
    CapExceeded { cap: u64 },

    #[error("the neighbor-entry bound only holds for the default cosine potential")]
    NonDefaultPotential,

    #[error("eigenvalue computation did not converge")]
    EigenFailure,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag for the variant, used by the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "NotSquare",
            Error::Empty => "Empty",
            Error::NonFinite { .. } => "NonFinite",
            Error::NegativeEntry { .. } => "NegativeEntry",
            Error::RowSumOutOfTolerance { .. } => "RowSumOutOfTolerance",
            Error::RowSumExceedsOne { .. } => "RowSumExceedsOne",
            Error::Reducible { .. } => "Reducible",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::SameIndex(_) => "SameIndex",
            Error::ProbabilityOutOfRange { .. } => "ProbabilityOutOfRange",
            Error::NotDominated { .. } => "NotDominated",
            Error::DominationViolated { .. } => "DominationViolated",
            Error::EnvelopeMismatch => "EnvelopeMismatch",
            Error::NoSlack { .. } => "NoSlack",
            Error::EtaTooLarge { .. } => "EtaTooLarge",
            Error::ZeroSamples => "ZeroSamples",
            Error::CapExceeded { .. } => "CapExceeded",
            Error::NonDefaultPotential => "NonDefaultPotential",
            Error::EigenFailure => "EigenFailure",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Parse { .. } => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn format_components(components: &[Vec<usize>]) -> String {
    components
        .iter()
        .map(|c| {
            let items: Vec<String> = c.iter().map(|s| s.to_string()).collect();
            format!("{{{}}}", items.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

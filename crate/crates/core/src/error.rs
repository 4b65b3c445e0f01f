use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside the library and the command layer.
///
/// Variants are grouped by the exit code the command line maps them to:
/// configuration problems (2), bad input data (3) and numeric failures (4).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (non-positive pivot at index {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not symmetric (max relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid degrees of freedom {dof} for dimension {dim}")]
    InvalidDof { dof: f64, dim: usize },
    #[error("diagonal entry {index} is not positive")]
    ZeroDiagonal { index: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge: {0}")]
    NonConvergence(String),
    #[error("V_n table has no entry for t = {t} (table covers 1..={max})")]
    TableMissing { t: usize, max: usize },
    #[error("observation {index} has dimension {found}, expected {expected}")]
    HeterogeneousDims {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("observation {index} is not SPD: {reason}")]
    NonSpdObservation { index: usize, reason: String },
    #[error("trace contains no retained draws")]
    EmptyTrace,
    #[error("series too short: {len} values, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("contingency table has a zero margin")]
    DegenerateMargins,
    #[error("invalid number of clusters k = {k} for n = {n}")]
    BadK { k: usize, n: usize },
    #[error("missing scale matrix configuration: {0}")]
    MissingScaleConfig(String),
    #[error("series length T = {t} is shorter than dimension p = {p}")]
    TooShortSeries { t: usize, p: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("configuration error in {location}: {message}")]
    Config { location: String, message: String },
    #[error("{file}: row {row} has {found} columns, expected {expected}")]
    RaggedSeries {
        file: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{file}: cell at row {row}, column {col} is not numeric: {cell:?}")]
    NonNumericCell {
        file: String,
        row: usize,
        col: usize,
        cell: String,
    },
    #[error("{file}: {len} rows, need at least {needed}")]
    InsufficientLength { file: String, len: usize, needed: usize },
    #[error("data error: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the command line: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidConfig(_) | Error::MissingScaleConfig(_) => 2,
            Error::Data(_)
            | Error::Io(_)
            | Error::HeterogeneousDims { .. }
            | Error::NonSpdObservation { .. }
            | Error::LengthMismatch { .. }
            | Error::TooShortSeries { .. }
            | Error::EmptyTrace
            | Error::DegenerateMargins
            | Error::BadK { .. }
            | Error::RaggedSeries { .. }
            | Error::NonNumericCell { .. }
            | Error::InsufficientLength { .. } => 3,
            _ => 4,
        }
    }

    pub fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

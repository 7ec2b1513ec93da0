use alloc::string::String;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Error categories surfaced by the pipeline.
///
/// Each variant maps to one machine-readable category string (see
/// [`Error::category`]); the CLI prints that string and derives its exit
/// status from it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input contained no usable event records.
    #[error("empty event log: {0}")]
    EmptyLog(String),
    /// Too many malformed lines for the declared format.
    #[error("format mismatch: {malformed} of {total} lines malformed ({context})")]
    Format {
        malformed: usize,
        total: usize,
        context: String,
    },
    /// An event fell outside the period grid.
    #[error("out of range: {0}")]
    Range(String),
    /// Embedding window does not fit the series.
    #[error("window error: {0}")]
    Window(String),
    /// A cardinality precondition failed (k vs N, class counts, sizes).
    #[error("cardinality error: {0}")]
    Cardinality(String),
    /// Mismatched dimensions between two inputs.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A series has too few observations for the requested fit.
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
    /// Non-finite or otherwise unusable numeric input.
    #[error("bad data: {0}")]
    Data(String),
    /// Labels collapse to a single class where at least two are needed.
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    /// A per-cluster model fit failed.
    #[error("fit failed for cluster {cluster}: {message}")]
    Fit { cluster: usize, message: String },
    /// Invalid configuration.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::EmptyLog(_) => "EmptyLog",
            Error::Format { .. } => "FormatError",
            Error::Range(_) => "RangeError",
            Error::Window(_) => "WindowError",
            Error::Cardinality(_) => "CardinalityError",
            Error::Shape(_) => "ShapeError",
            Error::InsufficientHistory(_) => "InsufficientHistory",
            Error::Data(_) => "DataError",
            Error::DegenerateLabels(_) => "DegenerateLabels",
            Error::Fit { .. } => "FitError",
            Error::Config(_) => "ConfigError",
        }
    }
}

//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by kernel construction, solvers, metrics, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid kernel weight {0}: weights must be non-negative")]
    InvalidWeight(f64),

    #[error("kernel bank is empty")]
    EmptyBank,

    #[error("matrix is not symmetric: max |K - K'| = {max_dev:e} exceeds {tol:e}")]
    Asymmetric { max_dev: f64, tol: f64 },

    #[error("negative kernel entry {0} at ({1}, {2}): geometric mean undefined")]
    NegativeEntry(f64, usize, usize),

    #[error("factorization failed even with diagonal jitter {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("invalid kernel response {0}: responses of PSD kernels must be non-negative")]
    InvalidResponse(f64),

    #[error("unsupported norm exponent p = {0}: {1}")]
    UnsupportedExponent(f64, &'static str),

    #[error("step-size failure in gradient ascent: {0}")]
    StepSize(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("missing species tag for anomaly at index {0}")]
    MissingSpecies(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported model format version {found} (this build reads up to v{supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("all {0} grid cells failed; first failure: {1}")]
    GridFailed(usize, String),

    #[error("insufficient {class} samples for split: need at least {needed}, have {available}")]
    InsufficientSplit {
        class: &'static str,
        needed: usize,
        available: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

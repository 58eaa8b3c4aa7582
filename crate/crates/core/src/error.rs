use thiserror::Error;

/// Errors produced by the library. CLI exit codes are derived from these.
#[derive(Debug, Error)]
pub enum Error {
    #[error("amplitude vector is not normalized: squared norm {norm} (tolerance {tolerance})")]
    NotNormalized { norm: f64, tolerance: f64 },

    #[error("amplitude vector length {len} is not a power of two >= 2")]
    BadLength { len: usize },

    #[error("qubit count mismatch: {what} has n = {found}, expected n = {expected}")]
    SizeMismatch {
        what: &'static str,
        found: usize,
        expected: usize,
    },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("n must be at least 1 (got {0})")]
    InvalidSize(usize),

    #[error("qubit {0} is not part of this architecture")]
    UnknownQubit(String),

    #[error("moment conflict: qubit {qubit} is used by more than one gate")]
    Conflict { qubit: String },

    #[error("connectivity violation: {gate} is not realizable on the architecture")]
    Connectivity { gate: String },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("term capacity {cap} exceeded at moment {moment} ({terms} terms)")]
    Capacity {
        cap: usize,
        moment: usize,
        terms: usize,
    },

    #[error("dense simulation needs {needed} qubits, guard is {guard}")]
    DenseGuard { needed: usize, guard: usize },

    #[error("error configuration has {found} moments, circuit has {expected}")]
    ConfigLength { found: usize, expected: usize },

    #[error("{0}")]
    Contract(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

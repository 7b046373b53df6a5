//! Error type shared by the library.

use thiserror::Error;

/// One failing subset of a Radó-type dimension check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailedSubset {
    /// Zero-based output indices.
    pub outputs: Vec<usize>,
    pub achieved: usize,
    pub required: usize,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{what}: row {row}, column {col}: {detail}")]
    Parse {
        what: String,
        row: usize,
        col: usize,
        detail: String,
    },
    #[error("malformed input: {0}")]
    Input(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("reference not trackable")]
    NotTrackable,
    #[error("coincident minimum-phase zeros unsupported")]
    CoincidentZeros,
    #[error("minimum-phase zero {0} is not representable exactly; use float mode")]
    InexactZero(String),
    #[error("degenerate compression: determinant identically zero after {0} attempts")]
    DegenerateCompression(usize),
    #[error("subset enumeration bound exceeded (p = {0} > 20)")]
    TooManyOutputs(usize),
    #[error("unsolvable: {reason}")]
    Unsolvable {
        reason: String,
        failed_subsets: Vec<FailedSubset>,
    },
    #[error("{0}")]
    RetriesExhausted(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("feedback not stabilizing")]
    NotStabilizing,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the qutrit circuit toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("axis weights must lie in {{-1, 0, 1}} and not all be zero, got ({x}, {y}, {z})")]
    InvalidWeights { x: i8, y: i8, z: i8 },

    #[error("gate on sites ({site}, {}) does not fit a {n_sites}-qutrit register", site + 1)]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("register of {0} qutrits exceeds the dense-matrix limit of {max}", max = crate::linalg::MAX_SITES)]
    RegisterTooLarge(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("turnover pattern mismatch at gate {index}: {reason}")]
    PatternMismatch { index: usize, reason: String },

    #[error("scheme {scheme} takes {expected} parameters, got {found}")]
    ParamCount {
        scheme: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),

    #[error("no gate-count formula for scheme {scheme} with nb = {nb}")]
    UnsupportedCountFormula { scheme: String, nb: usize },

    #[error("cost is not finite at the initial point")]
    NonFiniteCost,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

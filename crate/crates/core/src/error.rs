use std::path::PathBuf;

use crate::standards::ServiceCode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Geometry violates a structural invariant.
    #[error("invalid geometry: {0}")]
    Validation(String),

    /// An argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Too few distinct sites, or all sites collinear.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("standard for {service} is {found}, expected {expected}")]
    WrongKind {
        service: ServiceCode,
        found: &'static str,
        expected: &'static str,
    },

    #[error("unknown service code `{0}` (expected one of KG, PRI, PRE, SEC, AMB, HU, HOSP, MOSQ, CHUR, CULT, PARK, POST, FIRE)")]
    UnknownServiceCode(String),

    #[error("{path}: expected {expected} features, offending feature indices {offending:?}")]
    KindMismatch {
        path: PathBuf,
        expected: &'static str,
        offending: Vec<usize>,
    },

    #[error("{path}: parse error at byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("{path}: feature {feature}: {message}")]
    Feature {
        path: PathBuf,
        feature: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 for validation-class failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}

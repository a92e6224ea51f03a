use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MoebiusError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MoebiusError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot allocate {requested} entries for {what}")]
    Resource {
        what: &'static str,
        requested: usize,
    },

    #[error("numerical failure at n = {n}: {detail}")]
    NumericalFailure { n: u64, detail: String },

    #[error("identity violated at index {index}: {detail}")]
    IdentityViolation { index: u64, detail: String },

    #[error("corrupt cache {path}: {detail}")]
    CorruptCache {
        path: PathBuf,
        /// First n whose stored value is unusable, when the damage is in the value region.
        index: Option<u64>,
        detail: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MoebiusError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        MoebiusError::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MoebiusError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Allocates a zeroed vector, reporting the size on failure instead of aborting.
pub(crate) fn try_zeroed<T: Clone + Default>(len: usize, what: &'static str) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len)
        .map_err(|_| MoebiusError::Resource {
            what,
            requested: len,
        })?;
    v.resize(len, T::default());
    Ok(v)
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("{path}: unsupported pixel layout ({layout}); expected 8- or 16-bit RGB")]
    UnsupportedChannels { path: PathBuf, layout: String },

    #[error("{path}: bad magic, expected \"DSP1\"")]
    BadMagic { path: PathBuf },

    #[error("{path}: truncated payload ({got} bytes, expected {expected})")]
    Truncated {
        path: PathBuf,
        got: usize,
        expected: usize,
    },

    #[error("{what}: non-finite value at index {index}")]
    NonFinite { what: String, index: usize },

    #[error("{what}: dimension mismatch ({expected_w}x{expected_h} vs {got_w}x{got_h})")]
    DimensionMismatch {
        what: String,
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{path}: invalid mask value {value} (only 0 and 255 allowed)")]
    InvalidMaskValue { path: PathBuf, value: u8 },

    #[error("clip {dir}: {message}")]
    Clip { dir: PathBuf, message: String },

    #[error("row {row} has no valid disparity samples")]
    EmptyScanline { row: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("json error on {path}: {message}")]
    Json { path: PathBuf, message: String },

    #[error("denoiser returned wrong shape at step {step}: {message}")]
    DenoiserShape { step: usize, message: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by state, model, and pipeline operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A rotation error vector left the retraction domain (‖e‖ ≥ 1).
    #[error("rotation error leaves the unit-quaternion domain: |e| = {norm:.6}")]
    ErrorOutOfDomain { norm: f64 },

    /// Shapes of inputs disagree with the model or with each other.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A body-model file or construction violated an invariant.
    #[error("invalid body model ({field}): {reason}")]
    InvalidModel { field: &'static str, reason: String },

    /// Fewer frames than an operation needs.
    #[error("insufficient history: need at least {needed} frames, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    /// Serialized network weights are malformed or of the wrong shape.
    #[error("invalid weights: {0}")]
    Weights(String),

    /// Fusion received a non-finite mean or variance.
    #[error("fusion input is not finite")]
    NonFinite,

    /// A point is behind the camera (or closer than the near limit).
    #[error("point behind camera: z = {z:.6}")]
    BehindCamera { z: f64 },

    /// A target covariance cannot be inverted.
    #[error("singular target covariance for joint {joint}")]
    SingularTarget { joint: usize },

    /// Point sets too degenerate for similarity alignment.
    #[error("degenerate point configuration for alignment: {0}")]
    DegenerateAlignment(String),

    /// Invalid scenario, tracker, or CLI configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// A line of a JSONL stream failed to parse.
    #[error("{path}:{line}: {message}")]
    JsonLine {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for bad input, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ErrorOutOfDomain { .. }
            | Error::NonFinite
            | Error::BehindCamera { .. }
            | Error::SingularTarget { .. }
            | Error::DegenerateAlignment(_) => 3,
            _ => 2,
        }
    }
}

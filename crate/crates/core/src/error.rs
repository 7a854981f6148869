use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T, E = HisdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HisdError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("invalid direction frame: {0}")]
    InvalidFrame(String),

    /// Gram-Schmidt lost linear independence: the normalization constant of
    /// vector `index` fell to or below the threshold.
    #[error("degenerate frame: Y_{index} = {norm:e} is not above {eps:e}")]
    DegenerateFrame { index: usize, norm: f64, eps: f64 },

    #[error("T = {t_final} is not an integer multiple of tau = {tau}")]
    NonIntegerStepCount { t_final: f64, tau: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("{0}")]
    BoundViolation(BoundViolation),

    /// Integration stopped early. The records computed so far are kept.
    #[error("integration aborted at step {step}: {source}")]
    Aborted {
        step: usize,
        partial: Box<Trajectory>,
        #[source]
        source: Box<HisdError>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HisdError {
    /// Strips any `Aborted` wrappers and returns the underlying cause.
    pub fn root(&self) -> &HisdError {
        match self {
            HisdError::Aborted { source, .. } => source.root(),
            other => other,
        }
    }
}

/// A failed inequality from the auxiliary-estimate suite.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundViolation {
    pub lemma: String,
    pub tau: f64,
    pub step: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl std::fmt::Display for BoundViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} violated at tau = {}, step {}: {:e} > {:e}",
            self.lemma, self.tau, self.step, self.lhs, self.rhs
        )
    }
}

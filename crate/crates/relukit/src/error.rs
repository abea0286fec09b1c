use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("input norm {norm} is not within {tol} of 1")]
    NotUnitNorm { norm: f64, tol: f64 },

    #[error("label {y} outside declared range [{lo}, {hi}]")]
    LabelOutOfRange { y: f64, lo: f64, hi: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("operation requires label range {expected}, dataset declares {got}")]
    WrongLabelRange { expected: String, got: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degree ceiling {ceiling} reached at accuracy {eps} (grid error {achieved})")]
    DegreeCeiling { ceiling: usize, eps: f64, achieved: f64 },

    #[error("explicit feature dimension {dim} exceeds limit {limit}")]
    FeatureDimTooLarge { dim: usize, limit: usize },

    #[error("Gram matrix indefinite beyond tolerance (jitter {jitter} insufficient)")]
    IndefiniteGram { jitter: f64 },

    #[error("solver did not converge within {iterations} iterations (objective {objective})")]
    NonConvergence { iterations: usize, objective: f64 },

    #[error("loss '{0}' is not monotone; thresholded output requires a monotone loss")]
    NonMonotoneLoss(String),

    #[error("loss '{0}' is not convex")]
    NonConvexLoss(String),

    #[error("certification failed at layer {layer}: gap {gap} exceeds bound {bound}")]
    CertificationFailed { layer: usize, gap: f64, bound: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

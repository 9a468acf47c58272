//! Gaussian-process regression with explicit basis functions.

mod basis;
mod kernel;
mod linalg;
mod metrics;
mod model;
pub mod optim;
mod shap;

use thiserror::Error;

pub use basis::BasisKind;
pub(crate) use linalg::dot;
pub use kernel::{kernel_eval, kernel_matrix, KernelFamily, KernelParams, KernelSpec};
pub use metrics::{regression_metrics, Metrics};
pub use model::{FitSummary, GprModel, LmlProblem, ModelRecord, Prediction, TrainOptions, JITTER_LADDER, MIN_NOISE_VAR};
pub use shap::{shapley_values, Attribution, MAX_EXACT_FEATURES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GprError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel matrix not positive definite after jitter")]
    SingularKernel,
    #[error("non-finite training value")]
    NonFinite,
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("target has zero variance")]
    ZeroVariance,
    #[error("exact attribution supports at most 10 features, got {0}")]
    TooManyFeatures(usize),
    #[error("background sample is empty")]
    EmptyBackground,
    #[error("hyperparameters must be positive and finite")]
    InvalidHyperparameters,
    #[error("unknown kernel or basis name {0:?}")]
    UnknownName(String),
    #[error("invalid model record: {0}")]
    Record(String),
}

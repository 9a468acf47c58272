//! Antoine-equation targets, chemistry filtering, dataset construction and
//! leakage-free partitioning.

mod antoine;
pub(crate) mod dataset;
mod split;

pub use antoine::{antoine_vp, fit_antoine, AntoineFit, AntoineParams, VpEval, BAR_TO_PA_LOG10};
pub use dataset::{
    build_fixed_dataset, build_variable_dataset, build_variable_dataset_with, composition_filter, sample_temperatures, AntoineRecord, Dataset,
    FilterReport, RejectReason, VpInstance, DEFAULT_SAMPLES, FIXED_TEMPERATURE_K, MIN_CARBON, MIN_SEPARATION_K,
};
pub use split::{stratified_group_split, Partition, PartitionMap};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VaporError {
    #[error("T + C vanishes at T = {t} K (C = {c})")]
    SingularTemperature { t: f64, c: f64 },
    #[error("invalid Antoine parameters: {0}")]
    InvalidParams(String),
    #[error("need at least 3 fit points, got {0}")]
    InsufficientPoints(usize),
    #[error("Antoine fit did not converge from any C seed")]
    NonConvergence,
    #[error("temperature range [{t_min}, {t_max}] K is narrower than the minimum separation")]
    DegenerateRange { t_min: f64, t_max: f64 },
    #[error("{groups} molecules cannot fill {needed} partitions")]
    TooFewGroups { groups: usize, needed: usize },
}

//! Vapor-pressure surrogate modeling and low-volatility molecule screening.
//!
//! The crate is organized by pipeline stage:
//!
//! * [`chemgraph`] - SMILES subset, molecular graphs, descriptors, fingerprints
//! * [`vapordata`] - Antoine equation, chemistry filters, datasets, partitioning
//! * [`featsel`] - constant/correlation filters and LASSO with the 1SE rule
//! * [`gpr`] - Gaussian-process regression, metrics, Shapley attribution
//! * [`subsearch`] - staged exhaustive feature-subset search and ensembles
//! * [`molgen`] - probabilistic fragment-growth molecule generator
//! * [`screen`] - two-temperature vapor-pressure screening
//! * [`chemspace`] - distances, t-SNE, DBSCAN, medoids, cluster statistics

pub mod chemgraph;
pub mod chemspace;
pub mod featsel;
pub mod gpr;
pub mod hashing;
pub mod molgen;
pub mod screen;
pub mod stats;
pub mod subsearch;
pub mod synth;
pub mod vapordata;

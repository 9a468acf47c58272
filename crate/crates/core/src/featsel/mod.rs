//! Feature pruning and LASSO-based selection.

mod filters;
mod lasso;

use std::collections::{BTreeSet, HashSet};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::chemgraph::{static_descriptors, MolGraph, DESCRIPTOR_NAMES};
use crate::vapordata::Partition;

pub use filters::{correlation_filter, drop_constant, pearson_r2, DroppedPair};
pub use lasso::{
    cd_sweep, lambda_grid, lambda_max, lasso_cv_1se, lasso_objective, lasso_path, one_se_rule, soft_threshold,
    LassoCv, LassoPath, CD_TOLERANCE, GRID_POINTS, GRID_RATIO, MAX_SWEEPS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatselError {
    #[error("feature matrix has no rows")]
    Empty,
    #[error("every feature column is constant")]
    AllConstant,
    #[error("coordinate descent did not converge at lambda {lambda}")]
    NonConvergence { lambda: f64 },
    #[error("duplicate feature name {0:?}")]
    DuplicateName(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in column {column:?}, row {row}")]
    NonFinite { column: String, row: usize },
    #[error("{rows} rows cannot be split into {folds} folds")]
    TooFewRows { rows: usize, folds: usize },
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
}

/// Named real-valued columns with rows aligned to dataset instances.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub data: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, data: DMatrix<f64>) -> Result<FeatureMatrix, FeatselError> {
        if names.len() != data.ncols() {
            return Err(FeatselError::Shape(format!("{} names for {} columns", names.len(), data.ncols())));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(FeatselError::DuplicateName(n.clone()));
            }
        }
        for (j, col) in data.column_iter().enumerate() {
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(FeatselError::NonFinite { column: names[j].clone(), row });
            }
        }
        Ok(FeatureMatrix { names, data })
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.index_of(name).map(|j| self.data.column(j).iter().copied().collect())
    }

    pub fn select_columns(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: idx.iter().map(|&j| self.names[j].clone()).collect(),
            data: self.data.select_columns(idx),
        }
    }

    pub fn select_named(&self, names: &[String]) -> Result<FeatureMatrix, FeatselError> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n).ok_or_else(|| FeatselError::UnknownFeature(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.select_columns(&idx))
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            data: self.data.select_rows(idx),
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }
}

/// Name of the temperature column appended by [`descriptor_matrix`].
pub const TEMPERATURE_FEATURE: &str = "T";

/// Static descriptor columns, plus a temperature column when
/// `with_temperature`, one row per (molecule, temperature) pair.
pub fn descriptor_matrix(rows: &[(&MolGraph, f64)], with_temperature: bool) -> Result<FeatureMatrix, FeatselError> {
    let mut names: Vec<String> = DESCRIPTOR_NAMES.iter().map(|s| s.to_string()).collect();
    if with_temperature {
        names.push(TEMPERATURE_FEATURE.to_string());
    }
    let width = names.len();
    let mut data = DMatrix::zeros(rows.len(), width);
    for (i, (mol, t)) in rows.iter().enumerate() {
        for (j, v) in static_descriptors(mol).into_iter().enumerate() {
            data[(i, j)] = v;
        }
        if with_temperature {
            data[(i, width - 1)] = *t;
        }
    }
    FeatureMatrix::new(names, data)
}

/// Sorted, deduplicated union of the per-fold active sets. The flag is set
/// when the union is empty.
pub fn outer_union(fold_active_sets: &[Vec<String>]) -> (Vec<String>, bool) {
    let all: BTreeSet<&String> = fold_active_sets.iter().flatten().collect();
    let out: Vec<String> = all.into_iter().cloned().collect();
    let empty = out.is_empty();
    (out, empty)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub r2_threshold: f64,
    pub inner_folds: usize,
    /// Columns that bypass filtering and LASSO and are always selected.
    pub always_keep: Vec<String>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            r2_threshold: 0.5,
            inner_folds: 10,
            always_keep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub constant_removed: Vec<String>,
    pub correlated: Vec<DroppedPair>,
    /// Candidate columns that entered LASSO.
    pub candidates: Vec<String>,
    pub fold_active: Vec<Vec<String>>,
    pub fold_lambda: Vec<f64>,
    pub selected: Vec<String>,
    pub empty_union: bool,
}

impl SelectionReport {
    /// Rows of `feature,fold0,fold1,...,selected` with 0/1 flags.
    pub fn table(&self) -> Vec<(String, Vec<bool>, bool)> {
        self.candidates
            .iter()
            .map(|f| {
                let flags = self.fold_active.iter().map(|a| a.contains(f)).collect();
                (f.clone(), flags, self.selected.contains(f))
            })
            .collect()
    }
}

/// Filters on the non-holdout rows, then one LASSO-1SE model per outer fold
/// trained on the remaining CV folds, then the union of their active sets.
/// Holdout rows are never read.
pub fn select_features(
    x: &FeatureMatrix,
    y: &[f64],
    labels: &[Partition],
    config: &SelectionConfig,
    seed: u64,
) -> Result<SelectionReport, FeatselError> {
    if labels.len() != x.nrows() || y.len() != x.nrows() {
        return Err(FeatselError::Shape(format!(
            "{} rows, {} targets, {} labels",
            x.nrows(),
            y.len(),
            labels.len()
        )));
    }
    let dev: Vec<usize> = (0..x.nrows()).filter(|&i| !labels[i].is_holdout()).collect();
    let mut folds: Vec<u8> = labels
        .iter()
        .filter_map(|p| match p {
            Partition::Fold(k) => Some(*k),
            Partition::Holdout => None,
        })
        .collect();
    folds.sort_unstable();
    folds.dedup();

    let pool_idx: Vec<usize> = (0..x.ncols())
        .filter(|&j| !config.always_keep.contains(&x.names[j]))
        .collect();
    let pool = x.select_columns(&pool_idx).select_rows(&dev);
    let (nonconst, constant_removed) = drop_constant(&pool)?;
    let (filtered, correlated) = correlation_filter(&nonconst, config.r2_threshold);
    let candidates = filtered.names.clone();
    let full = x.select_named(&candidates)?;

    let mut fold_active = Vec::new();
    let mut fold_lambda = Vec::new();
    for &f in &folds {
        let train: Vec<usize> = dev.iter().copied().filter(|&i| labels[i] != Partition::Fold(f)).collect();
        let xt = full.select_rows(&train);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let cv = lasso_cv_1se(&xt, &yt, config.inner_folds, seed.wrapping_add(f as u64))?;
        fold_active.push(cv.active);
        fold_lambda.push(cv.lambda);
    }
    let (mut selected, empty_union) = outer_union(&fold_active);
    for name in &config.always_keep {
        if x.index_of(name).is_none() {
            return Err(FeatselError::UnknownFeature(name.clone()));
        }
        if !selected.contains(name) {
            selected.push(name.clone());
        }
    }
    Ok(SelectionReport {
        constant_removed,
        correlated,
        candidates,
        fold_active,
        fold_lambda,
        selected,
        empty_union,
    })
}

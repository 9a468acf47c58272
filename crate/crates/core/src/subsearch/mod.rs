//! Staged exhaustive feature-subset search over GPR models.

mod checkpoint;
mod ensemble;
mod stages;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::featsel::FeatselError;
use crate::gpr::{BasisKind, GprError, KernelSpec};

pub use checkpoint::Checkpoint;
pub use checkpoint::Entry as CheckpointEntry;
pub use ensemble::{EnsembleManifest, EnsembleMember, EnsembleModel, EnsemblePrediction, ManifestEntry, MANIFEST_FILE};
pub use stages::{
    cv_evaluate, cv_splits, derive_seed, run_search, stage1_screen, stage2_grid, stage3_final, index_records, Audit, CvScore, KeptModels,
    SearchConfig, SearchData, SearchOutcome,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("subset size {k} invalid for {n} features")]
    BadK { k: usize, n: usize },
    #[error(transparent)]
    Gpr(#[from] GprError),
    #[error(transparent)]
    Featsel(#[from] FeatselError),
    #[error("feature {0:?} not found")]
    MissingFeature(String),
    #[error("partition map has no cross-validation folds")]
    NoFolds,
    #[error("partition map has no holdout rows")]
    NoHoldout,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("io: {0}")]
    Io(String),
}

/// Binomial coefficient.
pub fn n_choose_k(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// All k-combinations of `0..n` in lexicographic order.
pub fn enumerate_subsets(n: usize, k: usize) -> Result<Vec<Vec<usize>>, SearchError> {
    if k == 0 || k > n {
        return Err(SearchError::BadK { k, n });
    }
    let mut out = Vec::with_capacity(n_choose_k(n, k) as usize);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return Ok(out);
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Basis and kernel pair evaluated in the grid stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Combo {
    pub basis: BasisKind,
    pub kernel: KernelSpec,
}

impl Combo {
    pub fn screening() -> Combo {
        Combo {
            basis: BasisKind::Constant,
            kernel: KernelSpec::new(crate::gpr::KernelFamily::Matern52, false),
        }
    }

    /// The 4 × 10 grid.
    pub fn grid() -> Vec<Combo> {
        BasisKind::ALL
            .iter()
            .flat_map(|&basis| KernelSpec::all().into_iter().map(move |kernel| Combo { basis, kernel }))
            .collect()
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.basis, self.kernel)
    }
}

impl FromStr for Combo {
    type Err = GprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (b, k) = s.split_once('/').ok_or_else(|| GprError::UnknownName(s.to_string()))?;
        Ok(Combo { basis: b.parse()?, kernel: k.parse()? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    ScreenedOut,
    GridDone,
    FinalKept,
    Failed,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::ScreenedOut => "screened_out",
            Status::GridDone => "grid_done",
            Status::FinalKept => "final_kept",
            Status::Failed => "failed",
        }
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Status::ScreenedOut, Status::GridDone, Status::FinalKept, Status::Failed]
            .into_iter()
            .find(|st| st.label() == s)
            .ok_or_else(|| format!("unknown status {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldoutMetrics {
    pub r2: f64,
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
}

impl From<crate::gpr::Metrics> for HoldoutMetrics {
    fn from(m: crate::gpr::Metrics) -> Self {
        HoldoutMetrics { r2: m.r2, rmse: m.rmse, mae: m.mae, mape: m.mape }
    }
}

/// Search results for one feature subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRecord {
    pub features: Vec<String>,
    pub stage1_r2: Option<f64>,
    pub combo: Option<Combo>,
    pub stage2_r2: Option<f64>,
    pub stage2_rmse: Option<f64>,
    pub holdout: Option<HoldoutMetrics>,
    pub status: Status,
    pub error: Option<String>,
}

impl SubsetRecord {
    pub fn new(features: Vec<String>) -> SubsetRecord {
        SubsetRecord {
            features,
            stage1_r2: None,
            combo: None,
            stage2_r2: None,
            stage2_rmse: None,
            holdout: None,
            status: Status::ScreenedOut,
            error: None,
        }
    }

    /// Stable identifier: feature names joined by '+'.
    pub fn key(&self) -> String {
        self.features.join("+")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_counts() {
        assert_eq!(enumerate_subsets(5, 2).unwrap().len(), 10);
        assert_eq!(enumerate_subsets(4, 4).unwrap(), vec![vec![0, 1, 2, 3]]);
        assert_eq!(n_choose_k(51, 2), 1275);
        assert_eq!(n_choose_k(51, 3), 20825);
        assert_eq!(n_choose_k(51, 4), 249_900);
        assert_eq!(enumerate_subsets(3, 0), Err(SearchError::BadK { k: 0, n: 3 }));
        assert_eq!(enumerate_subsets(3, 4), Err(SearchError::BadK { k: 4, n: 3 }));
    }

    #[test]
    fn lexicographic_without_duplicates() {
        let all = enumerate_subsets(7, 3).unwrap();
        assert_eq!(all.len(), 35);
        for w in all.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(all.iter().all(|s| s.windows(2).all(|p| p[0] < p[1])));
    }

    #[test]
    fn combo_grid() {
        let g = Combo::grid();
        assert_eq!(g.len(), 40);
        for c in &g {
            assert_eq!(c.to_string().parse::<Combo>().unwrap(), *c);
        }
        assert_eq!(Combo::screening().to_string(), "constant/matern52");
    }
}

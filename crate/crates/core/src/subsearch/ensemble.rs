use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Combo, HoldoutMetrics, SearchError};
use crate::featsel::FeatureMatrix;
use crate::gpr::GprModel;

#[derive(Debug, Clone)]
pub struct EnsembleMember {
    pub features: Vec<String>,
    pub combo: Combo,
    pub holdout: HoldoutMetrics,
    pub model: GprModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub mean: f64,
    /// Population standard deviation of the member means.
    pub std: f64,
    pub members: Vec<f64>,
}

impl EnsemblePrediction {
    pub fn from_members(members: Vec<f64>) -> EnsemblePrediction {
        let k = members.len() as f64;
        let mean = members.iter().sum::<f64>() / k;
        let var = members.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
        EnsemblePrediction { mean, std: var.sqrt(), members }
    }
}

/// Equal-weight average of member posterior means.
#[derive(Debug, Clone, Default)]
pub struct EnsembleModel {
    pub members: Vec<EnsembleMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub features: Vec<String>,
    pub combo: String,
    pub holdout_r2: f64,
    pub holdout_rmse: f64,
    pub holdout_mae: f64,
    pub holdout_mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub members: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "ensemble.json";

impl EnsembleModel {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Union of member features in first-seen order.
    pub fn required_features(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in &self.members {
            for f in &m.features {
                if !out.contains(f) {
                    out.push(f.clone());
                }
            }
        }
        out
    }

    /// Member predictions, one vector per member.
    pub fn member_means(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>, SearchError> {
        if self.members.is_empty() {
            return Err(SearchError::EmptyEnsemble);
        }
        self.members
            .iter()
            .map(|m| {
                let cols: Vec<usize> = m
                    .features
                    .iter()
                    .map(|f| x.index_of(f).ok_or_else(|| SearchError::MissingFeature(f.clone())))
                    .collect::<Result<_, _>>()?;
                let sub = DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x.data[(i, cols[j])]);
                Ok(m.model.predict_mean(&sub)?)
            })
            .collect()
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<EnsemblePrediction>, SearchError> {
        let per = self.member_means(x)?;
        Ok((0..x.nrows()).map(|i| EnsemblePrediction::from_members(per.iter().map(|p| p[i]).collect())).collect())
    }

    pub fn manifest(&self) -> EnsembleManifest {
        EnsembleManifest {
            members: self
                .members
                .iter()
                .enumerate()
                .map(|(i, m)| ManifestEntry {
                    file: format!("member_{i:02}.json"),
                    features: m.features.clone(),
                    combo: m.combo.to_string(),
                    holdout_r2: m.holdout.r2,
                    holdout_rmse: m.holdout.rmse,
                    holdout_mae: m.holdout.mae,
                    holdout_mape: m.holdout.mape,
                })
                .collect(),
        }
    }

    /// Writes one JSON file per member plus the manifest into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), SearchError> {
        let io = |e: std::io::Error| SearchError::Io(e.to_string());
        fs::create_dir_all(dir).map_err(io)?;
        let manifest = self.manifest();
        for (entry, m) in manifest.members.iter().zip(&self.members) {
            fs::write(dir.join(&entry.file), m.model.to_json()).map_err(io)?;
        }
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| SearchError::Io(e.to_string()))?;
        fs::write(dir.join(MANIFEST_FILE), text).map_err(io)
    }

    pub fn load(dir: &Path) -> Result<EnsembleModel, SearchError> {
        let io = |e: std::io::Error| SearchError::Io(e.to_string());
        let text = fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(io)?;
        let manifest: EnsembleManifest = serde_json::from_str(&text).map_err(|e| SearchError::Io(e.to_string()))?;
        let members = manifest
            .members
            .iter()
            .map(|e| {
                let model = GprModel::from_json(&fs::read_to_string(dir.join(&e.file)).map_err(io)?)?;
                if model.n_features() != e.features.len() {
                    return Err(SearchError::Io(format!("{}: feature count disagrees with manifest", e.file)));
                }
                Ok(EnsembleMember {
                    features: e.features.clone(),
                    combo: e.combo.parse()?,
                    holdout: HoldoutMetrics { r2: e.holdout_r2, rmse: e.holdout_rmse, mae: e.holdout_mae, mape: e.holdout_mape },
                    model,
                })
            })
            .collect::<Result<_, SearchError>>()?;
        Ok(EnsembleModel { members })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn member_aggregation() {
        let p = EnsemblePrediction::from_members(vec![-5.0, -6.0]);
        assert_eq!((p.mean, p.std), (-5.5, 0.5));
        let p = EnsemblePrediction::from_members(vec![-7.25; 10]);
        assert_eq!((p.mean, p.std), (-7.25, 0.0));
    }
}

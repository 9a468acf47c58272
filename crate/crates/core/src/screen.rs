//! Two-temperature vapor-pressure screen over candidate molecules.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::chemgraph::MolGraph;
use crate::featsel::{descriptor_matrix, FeatureMatrix};
use crate::subsearch::{EnsembleModel, EnsemblePrediction, SearchError};

/// Stage-1 cutoff: log10 of 1e-5 Pa.
pub const STAGE1_MAX_LOG10: f64 = -5.0;
pub const STAGE1_TEMPERATURE_K: f64 = 387.0;
/// Stage-2 cutoff: log10 of 5e-9 Pa.
pub const STAGE2_MAX_PA: f64 = 5e-9;
pub const STAGE2_TEMPERATURE_K: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScreenError {
    #[error("predictor {name} failed: {reason}")]
    PredictorFailure { name: String, reason: String },
}

/// log10 vapor pressure (Pa) with its spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VpPrediction {
    pub mean: f64,
    pub std: f64,
}

pub trait Predictor: Sync {
    fn name(&self) -> &str;

    /// Model input row for a molecule at temperature `t` (K).
    fn features(&self, mol: &MolGraph, t: f64) -> Result<Vec<f64>, ScreenError>;

    fn predict_row(&self, row: &[f64]) -> Result<VpPrediction, ScreenError>;

    fn predict(&self, mol: &MolGraph, t: f64) -> Result<VpPrediction, ScreenError> {
        self.predict_row(&self.features(mol, t)?)
    }
}

/// Returns the same value for every input.
#[derive(Debug, Clone)]
pub struct ConstantPredictor {
    pub value: f64,
    pub std: f64,
}

impl Predictor for ConstantPredictor {
    fn name(&self) -> &str {
        "constant"
    }

    fn features(&self, _mol: &MolGraph, _t: f64) -> Result<Vec<f64>, ScreenError> {
        Ok(Vec::new())
    }

    fn predict_row(&self, _row: &[f64]) -> Result<VpPrediction, ScreenError> {
        Ok(VpPrediction { mean: self.value, std: self.std })
    }
}

/// GPR ensemble over static descriptors (and temperature, when the
/// ensemble uses it).
#[derive(Debug, Clone)]
pub struct EnsemblePredictor {
    pub label: String,
    pub ensemble: EnsembleModel,
    names: Vec<String>,
    with_temperature: bool,
}

impl EnsemblePredictor {
    pub fn new(label: &str, ensemble: EnsembleModel) -> Result<EnsemblePredictor, SearchError> {
        if ensemble.is_empty() {
            return Err(SearchError::EmptyEnsemble);
        }
        let probe = crate::chemgraph::parse_smiles("C").expect("methane parses");
        let names = descriptor_matrix(&[(&probe, 0.0)], true)?.names;
        if let Some(missing) = ensemble.required_features().into_iter().find(|f| !names.contains(f)) {
            return Err(SearchError::MissingFeature(missing));
        }
        let with_temperature = ensemble.required_features().iter().any(|f| f == crate::featsel::TEMPERATURE_FEATURE);
        Ok(EnsemblePredictor { label: label.to_string(), ensemble, names, with_temperature })
    }

    pub fn uses_temperature(&self) -> bool {
        self.with_temperature
    }

    fn fail(&self, e: impl fmt::Display) -> ScreenError {
        ScreenError::PredictorFailure { name: self.label.clone(), reason: e.to_string() }
    }
}

impl Predictor for EnsemblePredictor {
    fn name(&self) -> &str {
        &self.label
    }

    fn features(&self, mol: &MolGraph, t: f64) -> Result<Vec<f64>, ScreenError> {
        Ok(descriptor_matrix(&[(mol, t)], true).map_err(|e| self.fail(e))?.row(0))
    }

    fn predict_row(&self, row: &[f64]) -> Result<VpPrediction, ScreenError> {
        let x = FeatureMatrix::new(self.names.clone(), nalgebra::DMatrix::from_row_slice(1, row.len(), row))
            .map_err(|e| self.fail(e))?;
        let p: EnsemblePrediction = self.ensemble.predict(&x).map_err(|e| self.fail(e))?.remove(0);
        if !p.mean.is_finite() {
            return Err(self.fail("non-finite prediction"));
        }
        Ok(VpPrediction { mean: p.mean, std: p.std })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    FailStage1,
    FailStage2,
    Pass,
    /// The predictor could not score the candidate.
    Error,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::FailStage1 => "fail_stage1",
            Verdict::FailStage2 => "fail_stage2",
            Verdict::Pass => "pass",
            Verdict::Error => "error",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Verdict::FailStage1, Verdict::FailStage2, Verdict::Pass, Verdict::Error]
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| format!("unknown verdict {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenConfig {
    pub stage1_temperature: f64,
    pub stage1_max_log10: f64,
    pub stage2_temperature: f64,
    pub stage2_max_log10: f64,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        ScreenConfig {
            stage1_temperature: STAGE1_TEMPERATURE_K,
            stage1_max_log10: STAGE1_MAX_LOG10,
            stage2_temperature: STAGE2_TEMPERATURE_K,
            stage2_max_log10: STAGE2_MAX_PA.log10(),
        }
    }
}

/// Inclusive cutoff: a prediction equal to the threshold passes.
pub fn passes(prediction: f64, max_log10: f64) -> bool {
    prediction <= max_log10
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenRow {
    pub smiles: String,
    pub stage1: Option<VpPrediction>,
    pub stage2: Option<VpPrediction>,
    pub verdict: Verdict,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScreenReport {
    pub rows: Vec<ScreenRow>,
}

impl ScreenReport {
    pub fn count(&self, v: Verdict) -> usize {
        self.rows.iter().filter(|r| r.verdict == v).count()
    }

    pub fn stage1_survivors(&self) -> usize {
        self.count(Verdict::Pass) + self.count(Verdict::FailStage2) + self.rows.iter().filter(|r| r.stage1.is_some() && r.verdict == Verdict::Error).count()
    }

    pub fn passed(&self) -> impl Iterator<Item = &ScreenRow> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Pass)
    }
}

/// First stage over every candidate. Returns a row per candidate; rows
/// that survive carry verdict `Pass` until stage 2 runs.
pub fn screen_stage1(candidates: &[(String, MolGraph)], predictor: &dyn Predictor, cfg: &ScreenConfig) -> Vec<ScreenRow> {
    candidates
        .par_iter()
        .map(|(smiles, mol)| match predictor.predict(mol, cfg.stage1_temperature) {
            Ok(p) => ScreenRow {
                smiles: smiles.clone(),
                stage1: Some(p),
                stage2: None,
                verdict: if passes(p.mean, cfg.stage1_max_log10) { Verdict::Pass } else { Verdict::FailStage1 },
                error: None,
            },
            Err(e) => ScreenRow { smiles: smiles.clone(), stage1: None, stage2: None, verdict: Verdict::Error, error: Some(e.to_string()) },
        })
        .collect()
}

/// Second stage over rows that passed stage 1; other rows are untouched.
pub fn screen_stage2(rows: &mut [ScreenRow], candidates: &[(String, MolGraph)], predictor: &dyn Predictor, cfg: &ScreenConfig) {
    rows.par_iter_mut().zip(candidates.par_iter()).for_each(|(row, (_, mol))| {
        if row.verdict != Verdict::Pass {
            return;
        }
        match predictor.predict(mol, cfg.stage2_temperature) {
            Ok(p) => {
                row.stage2 = Some(p);
                if !passes(p.mean, cfg.stage2_max_log10) {
                    row.verdict = Verdict::FailStage2;
                }
            }
            Err(e) => {
                row.verdict = Verdict::Error;
                row.error = Some(e.to_string());
            }
        }
    });
}

/// Both stages. `stage2` may be the same predictor as `stage1`.
pub fn screen(
    candidates: &[(String, MolGraph)],
    stage1: &dyn Predictor,
    stage2: &dyn Predictor,
    cfg: &ScreenConfig,
) -> ScreenReport {
    let mut rows = screen_stage1(candidates, stage1, cfg);
    screen_stage2(&mut rows, candidates, stage2, cfg);
    ScreenReport { rows }
}

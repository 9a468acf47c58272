use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::checkpoint::{Checkpoint, Entry};
use super::ensemble::{EnsembleMember, EnsembleModel};
use super::{enumerate_subsets, Combo, HoldoutMetrics, SearchError, Status, SubsetRecord};
use crate::featsel::FeatureMatrix;
use crate::gpr::optim::OptimOptions;
use crate::gpr::{regression_metrics, GprError, GprModel, TrainOptions};
use crate::hashing::Fnv;
use crate::vapordata::Partition;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub min_k: usize,
    pub max_k: usize,
    pub stage1_min_r2: f64,
    pub stage2_min_r2: f64,
    pub final_min_r2: f64,
    pub ensemble_size: usize,
    pub seed: u64,
    /// Optimizer starts per trained model.
    pub starts: usize,
    pub optim: OptimOptions,
    /// Subsets per checkpoint flush.
    pub checkpoint_every: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            min_k: 1,
            max_k: 4,
            stage1_min_r2: 0.7,
            stage2_min_r2: 0.85,
            final_min_r2: 0.9,
            ensemble_size: 10,
            seed: 0,
            starts: 3,
            optim: OptimOptions::default(),
            checkpoint_every: 256,
        }
    }
}

/// Feature matrix, target and partition label per row.
#[derive(Debug, Clone, Copy)]
pub struct SearchData<'a> {
    pub x: &'a FeatureMatrix,
    pub y: &'a [f64],
    pub labels: &'a [Partition],
}

impl SearchData<'_> {
    fn check(&self) -> Result<(), SearchError> {
        if self.y.len() != self.x.nrows() || self.labels.len() != self.x.nrows() {
            return Err(GprError::LengthMismatch { left: self.x.nrows(), right: self.y.len().min(self.labels.len()) }.into());
        }
        Ok(())
    }

    fn rows_where(&self, f: impl Fn(Partition) -> bool) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| f(self.labels[i])).collect()
    }

    fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.x.data[(rows[i], cols[j])])
    }

    fn targets(&self, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.y[i]).collect()
    }
}

/// (training rows, validation rows) for each cross-validation fold in
/// ascending fold order. Holdout rows appear in neither.
pub fn cv_splits(labels: &[Partition]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut folds: Vec<u8> = labels
        .iter()
        .filter_map(|p| match p {
            Partition::Fold(k) => Some(*k),
            Partition::Holdout => None,
        })
        .collect();
    folds.sort_unstable();
    folds.dedup();
    folds
        .iter()
        .map(|&k| {
            let mut train = Vec::new();
            let mut valid = Vec::new();
            for (i, p) in labels.iter().enumerate() {
                match p {
                    Partition::Fold(j) if *j == k => valid.push(i),
                    Partition::Fold(_) => train.push(i),
                    Partition::Holdout => {}
                }
            }
            (train, valid)
        })
        .collect()
}

/// Training seed for one model, independent of evaluation order.
pub fn derive_seed(master: u64, key: &str, combo: &str, fold: usize) -> u64 {
    let mut h = Fnv::new();
    h.write_u64(master);
    h.write_str(key);
    h.write_str(combo);
    h.write_u64(fold as u64);
    h.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvScore {
    pub mean_r2: f64,
    pub mean_rmse: f64,
    pub fold_r2: Vec<f64>,
}

fn train_options(cfg: &SearchConfig, seed: u64) -> TrainOptions {
    TrainOptions { starts: cfg.starts, seed, optim: cfg.optim, standardize: true }
}

/// Cross-validated R² and RMSE of one feature subset under one combo. Every
/// fold is attempted even after a failure so model counts stay exact.
pub fn cv_evaluate(
    data: &SearchData,
    splits: &[(Vec<usize>, Vec<usize>)],
    cols: &[usize],
    combo: Combo,
    cfg: &SearchConfig,
    counter: &AtomicUsize,
) -> Result<CvScore, GprError> {
    let key: Vec<&str> = cols.iter().map(|&c| data.x.names[c].as_str()).collect();
    let key = key.join("+");
    let combo_name = combo.to_string();
    let mut r2 = Vec::with_capacity(splits.len());
    let mut rmse = Vec::with_capacity(splits.len());
    let mut first_err = None;
    for (f, (train, valid)) in splits.iter().enumerate() {
        counter.fetch_add(1, AtomicOrdering::Relaxed);
        let opts = train_options(cfg, derive_seed(cfg.seed, &key, &combo_name, f));
        let res = GprModel::train(&data.submatrix(train, cols), &data.targets(train), combo.kernel, combo.basis, &opts)
            .and_then(|m| m.predict_mean(&data.submatrix(valid, cols)))
            .and_then(|pred| regression_metrics(&data.targets(valid), &pred));
        match res {
            Ok(m) => {
                r2.push(m.r2);
                rmse.push(m.rmse);
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    let k = r2.len() as f64;
    Ok(CvScore {
        mean_r2: r2.iter().sum::<f64>() / k,
        mean_rmse: rmse.iter().sum::<f64>() / k,
        fold_r2: r2,
    })
}

fn cols_of(data: &SearchData, rec: &SubsetRecord) -> Result<Vec<usize>, SearchError> {
    rec.features
        .iter()
        .map(|f| data.x.index_of(f).ok_or_else(|| SearchError::MissingFeature(f.clone())))
        .collect()
}

/// Fixed-combo cross-validated screen of every subset. Checkpointed results
/// are reused; new results are appended in chunks.
pub fn stage1_screen(
    data: &SearchData,
    subsets: &[Vec<usize>],
    cfg: &SearchConfig,
    mut checkpoint: Option<&mut Checkpoint>,
    counter: &AtomicUsize,
) -> Result<Vec<SubsetRecord>, SearchError> {
    data.check()?;
    let splits = cv_splits(data.labels);
    if splits.is_empty() {
        return Err(SearchError::NoFolds);
    }
    let mut records: Vec<SubsetRecord> = subsets
        .iter()
        .map(|s| SubsetRecord::new(s.iter().map(|&c| data.x.names[c].clone()).collect()))
        .collect();
    let mut pending = Vec::new();
    for (i, rec) in records.iter_mut().enumerate() {
        match checkpoint.as_ref().and_then(|c| c.get(1, &rec.key())) {
            Some(e) => {
                counter.fetch_add(splits.len(), AtomicOrdering::Relaxed);
                apply_stage1(rec, e.r2, e.error.clone());
            }
            None => pending.push(i),
        }
    }
    for chunk in pending.chunks(cfg.checkpoint_every.max(1)) {
        let results: Vec<Result<CvScore, GprError>> = chunk
            .par_iter()
            .map(|&i| cv_evaluate(data, &splits, &subsets[i], Combo::screening(), cfg, counter))
            .collect();
        let mut entries = Vec::with_capacity(chunk.len());
        for (&i, res) in chunk.iter().zip(results) {
            let (r2, err) = match res {
                Ok(s) => (Some(s.mean_r2), None),
                Err(e) => (None, Some(e.to_string())),
            };
            apply_stage1(&mut records[i], r2, err.clone());
            entries.push(Entry { stage: 1, key: records[i].key(), combo: None, r2, rmse: None, error: err });
        }
        if let Some(c) = checkpoint.as_deref_mut() {
            c.append(&entries)?;
        }
    }
    Ok(records)
}

fn apply_stage1(rec: &mut SubsetRecord, r2: Option<f64>, err: Option<String>) {
    rec.stage1_r2 = r2;
    rec.status = if err.is_some() { Status::Failed } else { Status::ScreenedOut };
    rec.error = err;
}

fn passes_stage1(rec: &SubsetRecord, cfg: &SearchConfig) -> bool {
    rec.status != Status::Failed && rec.stage1_r2.is_some_and(|r| r > cfg.stage1_min_r2)
}

/// Better-first order: higher mean R², then lower RMSE, then combo name.
fn rank_combos(a: &(Combo, CvScore), b: &(Combo, CvScore)) -> Ordering {
    b.1.mean_r2
        .total_cmp(&a.1.mean_r2)
        .then(a.1.mean_rmse.total_cmp(&b.1.mean_rmse))
        .then_with(|| a.0.to_string().cmp(&b.0.to_string()))
}

/// Full basis × kernel grid for every stage-1 survivor.
pub fn stage2_grid(
    data: &SearchData,
    records: &mut [SubsetRecord],
    cfg: &SearchConfig,
    mut checkpoint: Option<&mut Checkpoint>,
    counter: &AtomicUsize,
) -> Result<(), SearchError> {
    let splits = cv_splits(data.labels);
    let grid = Combo::grid();
    let survivors: Vec<usize> = (0..records.len()).filter(|&i| passes_stage1(&records[i], cfg)).collect();
    let mut pending = Vec::new();
    for &i in &survivors {
        match checkpoint.as_ref().and_then(|c| c.get(2, &records[i].key())) {
            Some(e) => {
                counter.fetch_add(splits.len() * grid.len(), AtomicOrdering::Relaxed);
                let combo = e.combo.as_deref().map(str::parse::<Combo>).transpose().map_err(|er| SearchError::Checkpoint(er.to_string()))?;
                apply_stage2(&mut records[i], combo, e.r2, e.rmse, e.error.clone());
            }
            None => pending.push(i),
        }
    }
    let per_chunk = (cfg.checkpoint_every / grid.len()).max(1);
    for chunk in pending.chunks(per_chunk) {
        let cols: Vec<Vec<usize>> = chunk.iter().map(|&i| cols_of(data, &records[i])).collect::<Result<_, _>>()?;
        let jobs: Vec<(usize, Combo)> = (0..chunk.len()).flat_map(|c| grid.iter().map(move |&g| (c, g))).collect();
        let scores: Vec<Result<CvScore, GprError>> = jobs
            .par_iter()
            .map(|&(c, combo)| cv_evaluate(data, &splits, &cols[c], combo, cfg, counter))
            .collect();
        let mut entries = Vec::with_capacity(chunk.len());
        for (c, &i) in chunk.iter().enumerate() {
            let mut ok: Vec<(Combo, CvScore)> = Vec::new();
            let mut err = None;
            for (g, combo) in grid.iter().enumerate() {
                match &scores[c * grid.len() + g] {
                    Ok(s) => ok.push((*combo, s.clone())),
                    Err(e) => {
                        err.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            ok.sort_by(rank_combos);
            let entry = match ok.first() {
                Some((combo, s)) => Entry {
                    stage: 2,
                    key: records[i].key(),
                    combo: Some(combo.to_string()),
                    r2: Some(s.mean_r2),
                    rmse: Some(s.mean_rmse),
                    error: None,
                },
                None => Entry { stage: 2, key: records[i].key(), combo: None, r2: None, rmse: None, error: err },
            };
            let combo = ok.first().map(|(c, _)| *c);
            apply_stage2(&mut records[i], combo, entry.r2, entry.rmse, entry.error.clone());
            entries.push(entry);
        }
        if let Some(c) = checkpoint.as_deref_mut() {
            c.append(&entries)?;
        }
    }
    Ok(())
}

fn apply_stage2(rec: &mut SubsetRecord, combo: Option<Combo>, r2: Option<f64>, rmse: Option<f64>, err: Option<String>) {
    match (combo, err) {
        (Some(c), _) => {
            rec.combo = Some(c);
            rec.stage2_r2 = r2;
            rec.stage2_rmse = rmse;
            rec.status = Status::GridDone;
        }
        (None, e) => {
            rec.status = Status::Failed;
            rec.error = e.or_else(|| Some("no combo trained".into()));
        }
    }
}

fn passes_stage2(rec: &SubsetRecord, cfg: &SearchConfig) -> bool {
    rec.status == Status::GridDone && rec.stage2_r2.is_some_and(|r| r > cfg.stage2_min_r2)
}

/// A kept subset's two models: trained on the CV folds (used for holdout
/// scoring) and retrained on every row.
#[derive(Debug, Clone)]
pub struct KeptModels {
    pub record: usize,
    pub cv_model: GprModel,
    pub full_model: GprModel,
}

/// Holdout evaluation of stage-2 survivors, then retraining of keepers on
/// all rows.
pub fn stage3_final(
    data: &SearchData,
    records: &mut [SubsetRecord],
    cfg: &SearchConfig,
    counter: &AtomicUsize,
) -> Result<Vec<KeptModels>, SearchError> {
    let dev = data.rows_where(|p| !p.is_holdout());
    let hold = data.rows_where(|p| p.is_holdout());
    if hold.is_empty() {
        return Err(SearchError::NoHoldout);
    }
    let all: Vec<usize> = (0..data.y.len()).collect();
    let survivors: Vec<usize> = (0..records.len()).filter(|&i| passes_stage2(&records[i], cfg)).collect();
    let results: Vec<Result<(usize, HoldoutMetrics, GprModel), (usize, String)>> = survivors
        .par_iter()
        .map(|&i| {
            let rec = &records[i];
            let cols = cols_of(data, rec).map_err(|e| (i, e.to_string()))?;
            let combo = rec.combo.expect("grid-done record has a combo");
            counter.fetch_add(1, AtomicOrdering::Relaxed);
            let opts = train_options(cfg, derive_seed(cfg.seed, &rec.key(), &combo.to_string(), usize::MAX));
            let model = GprModel::train(&data.submatrix(&dev, &cols), &data.targets(&dev), combo.kernel, combo.basis, &opts)
                .map_err(|e| (i, e.to_string()))?;
            let pred = model.predict_mean(&data.submatrix(&hold, &cols)).map_err(|e| (i, e.to_string()))?;
            let m = regression_metrics(&data.targets(&hold), &pred).map_err(|e| (i, e.to_string()))?;
            Ok((i, m.into(), model))
        })
        .collect();
    let mut kept = Vec::new();
    for res in results {
        match res {
            Ok((i, m, model)) => {
                records[i].holdout = Some(m);
                if m.r2 > cfg.final_min_r2 {
                    records[i].status = Status::FinalKept;
                    kept.push((i, model));
                }
            }
            Err((i, e)) => {
                records[i].status = Status::Failed;
                records[i].error = Some(e);
            }
        }
    }
    let retrained: Vec<Result<GprModel, GprError>> = kept
        .par_iter()
        .map(|(i, _)| {
            let rec = &records[*i];
            let cols = cols_of(data, rec).expect("resolved above");
            let combo = rec.combo.expect("kept record has a combo");
            counter.fetch_add(1, AtomicOrdering::Relaxed);
            let opts = train_options(cfg, derive_seed(cfg.seed, &rec.key(), &combo.to_string(), usize::MAX - 1));
            GprModel::train(&data.submatrix(&all, &cols), &data.targets(&all), combo.kernel, combo.basis, &opts)
        })
        .collect();
    let mut out = Vec::new();
    for ((i, cv_model), full) in kept.into_iter().zip(retrained) {
        match full {
            Ok(full_model) => out.push(KeptModels { record: i, cv_model, full_model }),
            Err(e) => {
                records[i].status = Status::Failed;
                records[i].error = Some(format!("retrain on all data: {e}"));
            }
        }
    }
    Ok(out)
}

/// Stage counts and the trained-model bookkeeping check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Audit {
    pub folds: usize,
    pub subsets: usize,
    pub stage1_survivors: usize,
    pub stage2_survivors: usize,
    pub kept: usize,
    pub models_trained: usize,
    pub models_expected: usize,
}

impl Audit {
    pub fn consistent(&self) -> bool {
        self.models_trained == self.models_expected
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub records: Vec<SubsetRecord>,
    pub ensemble: EnsembleModel,
    /// Ensemble scored on the holdout with the fold-trained members.
    pub ensemble_holdout: Option<HoldoutMetrics>,
    pub audit: Audit,
}

/// Runs all three stages over every subset of size `min_k..=max_k` and
/// assembles the top-ranked keepers into an ensemble.
pub fn run_search(data: &SearchData, cfg: &SearchConfig, checkpoint: Option<&Path>) -> Result<SearchOutcome, SearchError> {
    data.check()?;
    let n = data.x.ncols();
    let mut subsets = Vec::new();
    for k in cfg.min_k.max(1)..=cfg.max_k.min(n) {
        subsets.extend(enumerate_subsets(n, k)?);
    }
    let mut ckpt = checkpoint.map(Checkpoint::open).transpose()?;
    let counter = AtomicUsize::new(0);
    let folds = cv_splits(data.labels).len();

    let mut records = stage1_screen(data, &subsets, cfg, ckpt.as_mut(), &counter)?;
    let s1 = records.iter().filter(|r| passes_stage1(r, cfg)).count();
    stage2_grid(data, &mut records, cfg, ckpt.as_mut(), &counter)?;
    let s2 = records.iter().filter(|r| passes_stage2(r, cfg)).count();
    let kept = stage3_final(data, &mut records, cfg, &counter)?;
    let n_kept = records.iter().filter(|r| r.status == Status::FinalKept).count()
        + records.iter().filter(|r| r.error.as_deref().is_some_and(|e| e.starts_with("retrain"))).count();

    let mut ranked: Vec<&KeptModels> = kept.iter().collect();
    ranked.sort_by(|a, b| {
        let (ra, rb) = (&records[a.record], &records[b.record]);
        let (ha, hb) = (ra.holdout.unwrap(), rb.holdout.unwrap());
        hb.r2.total_cmp(&ha.r2).then(ha.rmse.total_cmp(&hb.rmse)).then_with(|| ra.key().cmp(&rb.key()))
    });
    ranked.truncate(cfg.ensemble_size);

    let hold = data.rows_where(|p| p.is_holdout());
    let ensemble_holdout = if ranked.is_empty() {
        None
    } else {
        let mut sum = vec![0.0; hold.len()];
        for km in &ranked {
            let cols = cols_of(data, &records[km.record])?;
            let pred = km.cv_model.predict_mean(&data.submatrix(&hold, &cols))?;
            for (s, p) in sum.iter_mut().zip(pred) {
                *s += p;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / ranked.len() as f64).collect();
        Some(regression_metrics(&data.targets(&hold), &mean)?.into())
    };
    let ensemble = EnsembleModel {
        members: ranked
            .iter()
            .map(|km| {
                let rec = &records[km.record];
                EnsembleMember {
                    features: rec.features.clone(),
                    combo: rec.combo.expect("kept record has a combo"),
                    holdout: rec.holdout.expect("kept record has holdout metrics"),
                    model: km.full_model.clone(),
                }
            })
            .collect(),
    };
    let audit = Audit {
        folds,
        subsets: subsets.len(),
        stage1_survivors: s1,
        stage2_survivors: s2,
        kept: n_kept,
        models_trained: counter.load(AtomicOrdering::Relaxed),
        models_expected: folds * subsets.len() + Combo::grid().len() * folds * s1 + s2 + n_kept,
    };
    Ok(SearchOutcome { records, ensemble, ensemble_holdout, audit })
}

/// Records keyed by subset for lookups in reports.
pub fn index_records(records: &[SubsetRecord]) -> HashMap<String, usize> {
    records.iter().enumerate().map(|(i, r)| (r.key(), i)).collect()
}

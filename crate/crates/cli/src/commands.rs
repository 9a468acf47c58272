//! One function per subcommand. Each reads its inputs from explicit paths or
//! the output directory, writes its artifacts there and returns the list of
//! files it produced.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use volscreen::chemgraph::{morgan_fingerprint, parse_smiles, to_smiles, Fingerprint, MolGraph};
use volscreen::chemspace::{
    cluster_medoid, cluster_stats, dbscan_points, default_eps, distance_matrix, tsne, DistanceMatrix, TsneConfig, NOISE,
};
use volscreen::featsel::{descriptor_matrix, select_features, FeatureMatrix};
use volscreen::molgen::generate_batch;
use volscreen::screen::{screen, EnsemblePredictor, Predictor, ScreenRow, Verdict};
use volscreen::subsearch::{run_search, Audit, EnsembleModel, HoldoutMetrics, SearchData, Status};
use volscreen::synth::antoine_corpus;
use volscreen::vapordata::{
    build_fixed_dataset, build_variable_dataset_with, composition_filter, fit_antoine, stratified_group_split,
    AntoineRecord, Dataset, Partition, RejectReason,
};

use crate::config::PipelineConfig;
use crate::io::{self, fmt_f64, ClusterRow, CsvOut, EmbeddedPoint};
use crate::svg;
use crate::CliError;

pub const RECORDS: &str = "records.csv";
pub const ANTOINE_FIT: &str = "antoine_fit.csv";
pub const FILTER_REPORT: &str = "filter_report.csv";
pub const GENERATED: &str = "generated.smi";
pub const TRACES: &str = "generated_traces.jsonl";
pub const SCREEN: &str = "screen.csv";
pub const EMBEDDING: &str = "embedding.csv";
pub const CLUSTERS: &str = "clusters.csv";
pub const CHEMSPACE_PARAMS: &str = "chemspace_params.json";
pub const PLOT: &str = "chemspace.svg";
pub const PREDICTIONS: &str = "predictions.csv";
pub const SHAP: &str = "shap.csv";

fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Which dataset a selection or search step works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Many temperatures per molecule, temperature as a feature.
    Variable,
    /// One row per molecule at the fixed screening temperature.
    Fixed,
}

impl Target {
    fn suffix(self) -> &'static str {
        match self {
            Target::Variable => "",
            Target::Fixed => "_fixed",
        }
    }

    pub fn with_temperature(self) -> bool {
        self == Target::Variable
    }

    pub fn dataset(self) -> String {
        format!("dataset{}.csv", self.suffix())
    }

    pub fn features(self) -> String {
        format!("features{}.csv", self.suffix())
    }

    pub fn selection(self) -> String {
        format!("selection_report{}.csv", self.suffix())
    }

    pub fn search_report(self) -> String {
        format!("search_report{}.csv", self.suffix())
    }

    pub fn ensemble(self) -> String {
        format!("ensemble{}", self.suffix())
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Variable => "variable",
            Target::Fixed => "fixed",
        })
    }
}

pub struct Context {
    pub cfg: PipelineConfig,
}

impl Context {
    pub fn out(&self) -> &Path {
        &self.cfg.out
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }
}

// fit-antoine

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub molecules: usize,
    pub fitted: usize,
    pub failed: usize,
}

/// Fits Antoine parameters per molecule and writes them as records.
pub fn fit_antoine_cmd(ctx: &Context, points: &Path) -> Result<(FitSummary, Vec<PathBuf>), CliError> {
    let sets = io::read_points(points)?;
    let mut records = Vec::new();
    let mut report = CsvOut::new(&["id", "sse", "iterations", "excluded", "error"]);
    for (id, (smiles, pts, exclude)) in &sets {
        match fit_antoine(pts, exclude) {
            Ok(fit) => {
                report.row(&[id.clone(), fmt_f64(fit.sse), fit.iterations.to_string(), exclude.len().to_string(), String::new()]);
                records.push(AntoineRecord { id: id.clone(), smiles: smiles.clone(), params: fit.params });
            }
            Err(e) => report.row(&[id.clone(), String::new(), String::new(), exclude.len().to_string(), e.to_string()]),
        }
    }
    let summary = FitSummary { molecules: sets.len(), fitted: records.len(), failed: sets.len() - records.len() };
    let (rec_path, fit_path) = (ctx.path(RECORDS), ctx.path(ANTOINE_FIT));
    io::write_records(&rec_path, &records)?;
    report.save(&fit_path)?;
    Ok((summary, vec![rec_path, fit_path]))
}

// synth-corpus

pub fn synth_corpus_cmd(ctx: &Context) -> Result<(usize, Vec<PathBuf>), CliError> {
    let records = antoine_corpus(&ctx.cfg.synthetic.corpus(), ctx.cfg.seed).map_err(runtime)?;
    let path = ctx.path(RECORDS);
    io::write_records(&path, &records)?;
    Ok((records.len(), vec![path]))
}

// build-dataset

#[derive(Debug, Clone, Serialize)]
pub struct BuildSummary {
    pub records: usize,
    pub kept: usize,
    pub rejected: usize,
    pub variable_molecules: usize,
    pub variable_rows: usize,
    pub fixed_rows: usize,
    pub fixed_skipped: usize,
}

fn features_for(dataset: &Dataset, mols: &BTreeMap<String, MolGraph>, with_t: bool) -> Result<(Vec<(String, f64)>, FeatureMatrix), CliError> {
    let rows: Vec<(&MolGraph, f64)> = dataset.instances.iter().map(|i| (&mols[&i.molecule_id], i.temperature)).collect();
    let x = descriptor_matrix(&rows, with_t).map_err(runtime)?;
    let keys = dataset.instances.iter().map(|i| (i.molecule_id.clone(), i.temperature)).collect();
    Ok((keys, x))
}

/// Filters records, builds the variable- and fixed-temperature datasets with
/// their partitions and descriptor features.
pub fn build_dataset_cmd(ctx: &Context, records_path: &Path) -> Result<(BuildSummary, Vec<PathBuf>), CliError> {
    let cfg = &ctx.cfg;
    let records = io::read_records(records_path)?;
    let filtered = composition_filter(&records);
    let mut report = CsvOut::new(&["id", "reason", "detail"]);
    for (id, reason) in &filtered.rejected {
        let detail = match reason {
            RejectReason::Parse(m) => m.clone(),
            RejectReason::Duplicate(first) => format!("same structure as {first}"),
            _ => String::new(),
        };
        report.row(&[id.clone(), reason.label().to_string(), detail]);
    }
    let mols: BTreeMap<String, MolGraph> = filtered
        .kept
        .iter()
        .map(|r| (r.id.clone(), parse_smiles(&r.smiles).expect("filter kept a parseable record")))
        .collect();

    let (variable, errors) = build_variable_dataset_with(&filtered.kept, cfg.dataset.samples, cfg.dataset.min_separation_k);
    for (id, e) in &errors {
        report.row(&[id.clone(), "antoine".to_string(), e.to_string()]);
    }
    let mut outputs = Vec::new();
    let report_path = ctx.path(FILTER_REPORT);
    report.save(&report_path)?;
    outputs.push(report_path);

    let split = stratified_group_split(&variable, cfg.dataset.folds, true, cfg.seed).map_err(runtime)?;
    let labels = split.labels_for(&variable).expect("split covers every molecule");
    let (keys, x) = features_for(&variable, &mols, true)?;
    let (dp, fp) = (ctx.path(&Target::Variable.dataset()), ctx.path(&Target::Variable.features()));
    io::write_dataset(&dp, &variable, &labels)?;
    io::write_features(&fp, &keys, &x)?;
    outputs.extend([dp, fp]);

    let (fixed, skipped) = build_fixed_dataset(&filtered.kept, cfg.dataset.fixed_temperature_k);
    let fixed_rows = match stratified_group_split(&fixed, cfg.dataset.folds, true, cfg.seed) {
        Ok(split) => {
            let labels = split.labels_for(&fixed).expect("split covers every molecule");
            let (keys, x) = features_for(&fixed, &mols, false)?;
            let (dp, fp) = (ctx.path(&Target::Fixed.dataset()), ctx.path(&Target::Fixed.features()));
            io::write_dataset(&dp, &fixed, &labels)?;
            io::write_features(&fp, &keys, &x)?;
            outputs.extend([dp, fp]);
            fixed.len()
        }
        Err(e) => {
            eprintln!("note: no fixed-temperature dataset ({e})");
            for name in [Target::Fixed.dataset(), Target::Fixed.features()] {
                let _ = fs::remove_file(ctx.path(&name));
            }
            0
        }
    };
    let summary = BuildSummary {
        records: records.len(),
        kept: filtered.kept.len(),
        rejected: filtered.rejected.len(),
        variable_molecules: variable.molecule_ids().len(),
        variable_rows: variable.len(),
        fixed_rows,
        fixed_skipped: skipped.len(),
    };
    Ok((summary, outputs))
}

/// Dataset targets, partitions and the aligned feature matrix of a target.
fn load_target(ctx: &Context, target: Target) -> Result<(Vec<f64>, Vec<Partition>, FeatureMatrix), CliError> {
    let dpath = ctx.path(&target.dataset());
    if !dpath.exists() {
        return Err(CliError::Validation(format!("{} not found; run build-dataset first", dpath.display())));
    }
    let (data, labels) = io::read_dataset(&dpath)?;
    let (keys, x) = io::read_features(&ctx.path(&target.features()))?;
    let aligned = keys.len() == data.len()
        && keys.iter().zip(&data.instances).all(|((id, t), i)| *id == i.molecule_id && t.to_bits() == i.temperature.to_bits());
    if !aligned {
        return Err(CliError::Validation(format!("{} and {} rows do not line up", target.dataset(), target.features())));
    }
    let y = data.instances.iter().map(|i| i.y).collect();
    Ok((y, labels, x))
}

// select-features

pub fn select_features_cmd(ctx: &Context, target: Target) -> Result<(Vec<String>, Vec<PathBuf>), CliError> {
    let (y, labels, x) = load_target(ctx, target)?;
    let sel = ctx.cfg.featsel.selection(target.with_temperature());
    let report = select_features(&x, &y, &labels, &sel, ctx.cfg.seed).map_err(runtime)?;
    if report.empty_union {
        eprintln!("warning: LASSO selected nothing for the {target} dataset");
    }
    let path = ctx.path(&target.selection());
    io::write_selection(&path, &report)?;
    Ok((report.selected, vec![path]))
}

// search-gpr

#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    pub target: Target,
    pub features: Vec<String>,
    pub subsets: usize,
    pub stage1_survivors: usize,
    pub stage2_survivors: usize,
    pub kept: usize,
    pub failed: usize,
    pub models_trained: usize,
    pub ensemble_size: usize,
    pub ensemble_holdout: Option<HoldoutSummary>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HoldoutSummary {
    pub r2: f64,
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
}

impl From<HoldoutMetrics> for HoldoutSummary {
    fn from(m: HoldoutMetrics) -> Self {
        HoldoutSummary { r2: m.r2, rmse: m.rmse, mae: m.mae, mape: m.mape }
    }
}

fn sha256_files(paths: &[PathBuf], extra: &str) -> Result<String, CliError> {
    let mut h = Sha256::new();
    for p in paths {
        h.update(fs::read(p).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", p.display())))?);
    }
    h.update(extra.as_bytes());
    Ok(hex::encode(h.finalize()))
}

/// Staged subset search over the selected features. Progress is
/// checkpointed under `checkpoints/`, keyed by the inputs and settings, so
/// an interrupted search resumes where it stopped.
pub fn search_gpr_cmd(ctx: &Context, target: Target) -> Result<(SearchSummary, Vec<PathBuf>), CliError> {
    let (y, labels, x) = load_target(ctx, target)?;
    let sel_path = ctx.path(&target.selection());
    if !sel_path.exists() {
        return Err(CliError::Validation(format!("{} not found; run select-features first", sel_path.display())));
    }
    let selected = io::read_selection(&sel_path)?;
    if selected.is_empty() {
        return Err(CliError::Runtime(format!("no features selected for the {target} dataset")));
    }
    let xs = x.select_named(&selected).map_err(|e| CliError::Validation(e.to_string()))?;
    let search = ctx.cfg.search.search(ctx.cfg.seed);
    let key = sha256_files(
        &[ctx.path(&target.dataset()), ctx.path(&target.features()), sel_path],
        &format!("{}{:?}", toml::to_string(&ctx.cfg.search).expect("section serializes"), ctx.cfg.seed),
    )?;
    let ckpt = ctx.path("checkpoints").join(format!("search{}-{}.jsonl", target.suffix(), &key[..16]));
    fs::create_dir_all(ckpt.parent().expect("has parent")).map_err(runtime)?;

    let data = SearchData { x: &xs, y: &y, labels: &labels };
    let outcome = run_search(&data, &search, Some(&ckpt)).map_err(runtime)?;
    let report = ctx.path(&target.search_report());
    io::write_search_report(&report, &outcome.records)?;
    let dir = ctx.path(&target.ensemble());
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(runtime)?;
    }
    let Audit { subsets, stage1_survivors, stage2_survivors, kept, models_trained, .. } = outcome.audit;
    let summary = SearchSummary {
        target,
        features: selected,
        subsets,
        stage1_survivors,
        stage2_survivors,
        kept,
        failed: outcome.records.iter().filter(|r| r.status == Status::Failed).count(),
        models_trained,
        ensemble_size: outcome.ensemble.len(),
        ensemble_holdout: outcome.ensemble_holdout.map(Into::into),
    };
    if outcome.ensemble.is_empty() {
        return Err(CliError::Runtime(format!(
            "no subset of the {target} dataset reached holdout R² > {} ({} subsets searched)",
            search.final_min_r2, subsets
        )));
    }
    outcome.ensemble.save(&dir).map_err(runtime)?;
    Ok((summary, vec![report, dir]))
}

fn load_ensemble(dir: &Path) -> Result<EnsembleModel, CliError> {
    if !dir.join(volscreen::subsearch::MANIFEST_FILE).exists() {
        return Err(CliError::Validation(format!("no ensemble at {}", dir.display())));
    }
    EnsembleModel::load(dir).map_err(runtime)
}

fn parse_candidates(smiles: &[String]) -> Vec<Result<(String, MolGraph), (String, String)>> {
    smiles
        .iter()
        .map(|s| match parse_smiles(s) {
            Ok(m) => Ok((to_smiles(&m), m)),
            Err(e) => Err((s.clone(), e.to_string())),
        })
        .collect()
}

// predict

pub fn predict_cmd(ctx: &Context, ensemble: &Path, smiles: &Path, temperatures: &[f64]) -> Result<(usize, Vec<PathBuf>), CliError> {
    let model = EnsemblePredictor::new("ensemble", load_ensemble(ensemble)?).map_err(runtime)?;
    let mut out = CsvOut::new(&io::PREDICTION_HEADER);
    let mut n = 0;
    for c in parse_candidates(&io::read_smiles_list(smiles)?) {
        let (s, mol) = c.map_err(|(s, e)| CliError::Validation(format!("{s}: {e}")))?;
        for &t in temperatures {
            let p = model.predict(&mol, t).map_err(runtime)?;
            out.row(&[s.clone(), fmt_f64(t), fmt_f64(p.mean), fmt_f64(p.std)]);
            n += 1;
        }
    }
    let path = ctx.path(PREDICTIONS);
    out.save(&path)?;
    Ok((n, vec![path]))
}

// shap

/// Exact Shapley attributions of every ensemble member for each molecule,
/// against up to `background` evenly spaced non-holdout training rows.
pub fn shap_cmd(
    ctx: &Context,
    target: Target,
    ensemble: &Path,
    smiles: &Path,
    temperature: f64,
    background: usize,
) -> Result<(usize, Vec<PathBuf>), CliError> {
    let model = load_ensemble(ensemble)?;
    let (_, labels, x) = load_target(ctx, target)?;
    let dev: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i].is_holdout()).collect();
    if dev.is_empty() || background == 0 {
        return Err(CliError::Validation("empty background set".into()));
    }
    let step = dev.len().div_ceil(background);
    let bg_rows: Vec<usize> = dev.iter().copied().step_by(step).collect();
    let bg = x.select_rows(&bg_rows);

    let mut out = CsvOut::new(&io::SHAP_HEADER);
    let mut n = 0;
    for c in parse_candidates(&io::read_smiles_list(smiles)?) {
        let (s, mol) = c.map_err(|(s, e)| CliError::Validation(format!("{s}: {e}")))?;
        let row = descriptor_matrix(&[(&mol, temperature)], target.with_temperature()).map_err(runtime)?;
        for (k, m) in model.members.iter().enumerate() {
            let xr = row.select_named(&m.features).map_err(runtime)?.row(0);
            let b = bg.select_named(&m.features).map_err(runtime)?;
            let attr = m.model.shapley(&xr, &b.data).map_err(runtime)?;
            let pred = attr.base + attr.values.iter().sum::<f64>();
            for (name, v) in m.features.iter().zip(&attr.values) {
                out.row(&[s.clone(), fmt_f64(temperature), k.to_string(), name.clone(), fmt_f64(*v), fmt_f64(attr.base), fmt_f64(pred)]);
                n += 1;
            }
        }
    }
    let path = ctx.path(SHAP);
    out.save(&path)?;
    Ok((n, vec![path]))
}

// generate

pub fn generate_cmd(ctx: &Context) -> Result<(usize, Vec<PathBuf>), CliError> {
    let g = &ctx.cfg.generator;
    let mols = generate_batch(ctx.cfg.seed, g.count, &g.growth).map_err(runtime)?;
    let smiles: Vec<String> = mols.iter().map(|m| m.smiles.clone()).collect();
    let mut traces = String::new();
    for m in &mols {
        traces.push_str(&serde_json::to_string(&m.trace).map_err(runtime)?);
        traces.push('\n');
    }
    let (sp, tp) = (ctx.path(GENERATED), ctx.path(TRACES));
    io::write_smiles_list(&sp, &smiles)?;
    io::write_bytes(&tp, traces.as_bytes())?;
    Ok((smiles.len(), vec![sp, tp]))
}

// screen

#[derive(Debug, Clone, Serialize)]
pub struct ScreenSummary {
    pub candidates: usize,
    pub errors: usize,
    pub stage1_survivors: usize,
    pub passed: usize,
    pub stage1_predictor: String,
    pub stage2_predictor: String,
}

pub fn screen_cmd(ctx: &Context, candidates: &Path, stage1: &Path, stage2: &Path) -> Result<(ScreenSummary, Vec<PathBuf>), CliError> {
    let label = |p: &Path| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string());
    let p1 = EnsemblePredictor::new(&label(stage1), load_ensemble(stage1)?).map_err(runtime)?;
    let p2 = EnsemblePredictor::new(&label(stage2), load_ensemble(stage2)?).map_err(runtime)?;
    let parsed = parse_candidates(&io::read_smiles_list(candidates)?);
    let good: Vec<(String, MolGraph)> = parsed.iter().filter_map(|c| c.as_ref().ok().cloned()).collect();
    let report = screen(&good, &p1, &p2, &ctx.cfg.screen.screen());
    let mut screened = report.rows.into_iter();
    let rows: Vec<ScreenRow> = parsed
        .into_iter()
        .map(|c| match c {
            Ok(_) => screened.next().expect("one row per parsed candidate"),
            Err((smiles, e)) => ScreenRow { smiles, stage1: None, stage2: None, verdict: Verdict::Error, error: Some(e) },
        })
        .collect();
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("warning: {}: {}", r.smiles, r.error.as_deref().unwrap_or_default());
    }
    let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
    let summary = ScreenSummary {
        candidates: rows.len(),
        errors: count(Verdict::Error),
        stage1_survivors: count(Verdict::Pass) + count(Verdict::FailStage2),
        passed: count(Verdict::Pass),
        stage1_predictor: p1.label.clone(),
        stage2_predictor: p2.label.clone(),
    };
    let path = ctx.path(SCREEN);
    io::write_screen(&path, &rows)?;
    Ok((summary, vec![path]))
}

// embed-cluster

#[derive(Debug, Clone, Serialize)]
pub struct EmbedSummary {
    pub embedded: usize,
    pub perplexity_requested: f64,
    pub perplexity_used: f64,
    pub eps: f64,
    pub eps_from_default: bool,
    pub min_pts: usize,
    pub metric: String,
    pub clusters: usize,
    pub noise: usize,
}

/// Fingerprints, t-SNE and DBSCAN over the selected screening rows, then
/// per-cluster statistics and fingerprint-space medoids.
pub fn embed_cluster_cmd(ctx: &Context, screen_path: &Path) -> Result<(EmbedSummary, Vec<PathBuf>), CliError> {
    let cs = &ctx.cfg.chemspace;
    let metric = cs.metric()?;
    let rows = io::read_screen(screen_path)?;
    let mut seen = HashSet::new();
    let chosen: Vec<&ScreenRow> = rows
        .iter()
        .filter(|r| match cs.embed.as_str() {
            "pass" => r.verdict == Verdict::Pass,
            "stage1" => matches!(r.verdict, Verdict::Pass | Verdict::FailStage2),
            _ => r.verdict != Verdict::Error,
        })
        .filter(|r| seen.insert(r.smiles.clone()))
        .collect();
    let n = chosen.len();
    if n < 4 {
        return Err(CliError::Runtime(format!("{n} molecules selected for embedding; need at least 4")));
    }
    let fps: Vec<Fingerprint> = chosen
        .iter()
        .map(|r| {
            let mol = parse_smiles(&r.smiles).map_err(|e| CliError::Validation(format!("{}: {e}", r.smiles)))?;
            morgan_fingerprint(&mol, cs.radius, cs.nbits).map_err(runtime)
        })
        .collect::<Result<_, _>>()?;
    let d = distance_matrix(&fps, metric).map_err(runtime)?;
    // the embedding needs n > 3 * perplexity
    let perplexity = cs.perplexity.min((n as f64 - 1.0) / 3.0);
    if perplexity < cs.perplexity {
        eprintln!("note: perplexity lowered from {} to {perplexity} for {n} points", cs.perplexity);
    }
    let tcfg = TsneConfig { perplexity, iterations: cs.iterations, seed: ctx.cfg.seed, ..TsneConfig::default() };
    let coords = tsne(&d, &tcfg).map_err(runtime)?.coords;
    let (eps, from_default) = match cs.eps {
        Some(e) => (e, false),
        None => {
            let k = cs.eps_neighbors.min(n - 1);
            (default_eps(&DistanceMatrix::from_points(&coords), k, cs.eps_quantile).map_err(runtime)?, true)
        }
    };
    let labels = dbscan_points(&coords, eps, cs.min_pts).map_err(runtime)?;
    let values: Vec<f64> = chosen.iter().map(|r| r.stage2.or(r.stage1).map(|p| p.mean).unwrap_or(f64::NAN)).collect();
    let stats = cluster_stats(&labels, &values).map_err(runtime)?;
    let mut clusters = Vec::new();
    for s in &stats {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == s.label).collect();
        let fp_refs: Vec<&Fingerprint> = members.iter().map(|&i| &fps[i]).collect();
        let m = cluster_medoid(&fp_refs, metric).map_err(runtime)?;
        clusters.push(ClusterRow { cluster: s.label, size: s.size, median: s.median, std: s.std, medoid: chosen[members[m]].smiles.clone() });
    }
    let points: Vec<EmbeddedPoint> = (0..n)
        .map(|i| EmbeddedPoint { id: chosen[i].smiles.clone(), x: coords[i][0], y: coords[i][1], cluster: labels[i] })
        .collect();
    let summary = EmbedSummary {
        embedded: n,
        perplexity_requested: cs.perplexity,
        perplexity_used: perplexity,
        eps,
        eps_from_default: from_default,
        min_pts: cs.min_pts,
        metric: metric.name().to_string(),
        clusters: stats.len(),
        noise: labels.iter().filter(|&&l| l == NOISE).count(),
    };
    let (ep, cp, pp) = (ctx.path(EMBEDDING), ctx.path(CLUSTERS), ctx.path(CHEMSPACE_PARAMS));
    io::write_embedding(&ep, &points)?;
    io::write_clusters(&cp, &clusters)?;
    io::write_bytes(&pp, serde_json::to_string_pretty(&summary).map_err(runtime)?.as_bytes())?;
    Ok((summary, vec![ep, cp, pp]))
}

// plot

pub fn plot_cmd(ctx: &Context, embedding: &Path, clusters: Option<&Path>) -> Result<(usize, Vec<PathBuf>), CliError> {
    let pts = io::read_embedding(embedding)?;
    let medoid_ids: HashSet<String> = match clusters {
        Some(p) => io::read_clusters(p)?.into_iter().map(|c| c.medoid).collect(),
        None => HashSet::new(),
    };
    let coords: Vec<[f64; 2]> = pts.iter().map(|p| [p.x, p.y]).collect();
    let labels: Vec<i32> = pts.iter().map(|p| p.cluster).collect();
    let medoids: Vec<usize> = (0..pts.len()).filter(|&i| medoid_ids.contains(&pts[i].id)).collect();
    let path = ctx.path(PLOT);
    svg::emit_svg_scatter(&coords, &labels, &medoids, &ctx.cfg.plot, &path)?;
    Ok((pts.len(), vec![path]))
}

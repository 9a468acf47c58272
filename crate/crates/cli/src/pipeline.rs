//! End-to-end run: records through datasets, feature selection, model
//! search, generation, screening and chemical-space clustering.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::commands::{self as cmd, BuildSummary, Context, EmbedSummary, ScreenSummary, SearchSummary, Target};
use crate::CliError;

pub const SUMMARY: &str = "summary.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub synthetic_records: bool,
    pub dataset: BuildSummary,
    pub selected_variable: Vec<String>,
    pub selected_fixed: Vec<String>,
    pub search_variable: SearchSummary,
    pub search_fixed: Option<SearchSummary>,
    pub generated: usize,
    pub screen: ScreenSummary,
    pub chemspace: EmbedSummary,
}

impl RunSummary {
    /// Human-readable stage counts.
    pub fn text(&self) -> String {
        let mut lines = vec![
            format!("records            {} ({} kept, {} rejected)", self.dataset.records, self.dataset.kept, self.dataset.rejected),
            format!("dataset rows       {} variable, {} fixed", self.dataset.variable_rows, self.dataset.fixed_rows),
            format!("selected features  {} variable, {} fixed", self.selected_variable.len(), self.selected_fixed.len()),
        ];
        let mut search = |s: &SearchSummary| {
            lines.push(format!(
                "search ({})  {} subsets -> {} -> {} -> {} kept, ensemble of {}",
                s.target, s.subsets, s.stage1_survivors, s.stage2_survivors, s.kept, s.ensemble_size
            ));
            if let Some(h) = s.ensemble_holdout {
                lines.push(format!(
                    "  ensemble holdout R2 {:.4}  RMSE {:.4}  MAE {:.4}  MAPE {:.2}%",
                    h.r2, h.rmse, h.mae, h.mape
                ));
            }
        };
        search(&self.search_variable);
        if let Some(s) = &self.search_fixed {
            search(s);
        }
        lines.push(format!("generated          {}", self.generated));
        lines.push(format!(
            "screening          {} candidates -> {} after stage 1 -> {} passed ({} errors)",
            self.screen.candidates, self.screen.stage1_survivors, self.screen.passed, self.screen.errors
        ));
        lines.push(format!(
            "chemical space     {} embedded, {} clusters, {} noise (perplexity {}, eps {:.4})",
            self.chemspace.embedded, self.chemspace.clusters, self.chemspace.noise, self.chemspace.perplexity_used, self.chemspace.eps
        ));
        lines.join("\n")
    }
}

fn stage<T>(name: &'static str, started: &Instant, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    let t = Instant::now();
    let out = f().map_err(|e| CliError::Stage { stage: name, source: Box::new(e) })?;
    eprintln!("[{:>7.1}s] {name} done in {:.1}s", started.elapsed().as_secs_f64(), t.elapsed().as_secs_f64());
    Ok(out)
}

/// Runs every stage in order, aborting at the first failure with the stage
/// name. Without configured records a synthetic corpus is written first.
pub fn run_end_to_end(ctx: &Context) -> Result<(RunSummary, Vec<PathBuf>), CliError> {
    let started = Instant::now();
    let mut outputs = Vec::new();
    let synthetic = ctx.cfg.paths.records.is_none();
    let records: PathBuf = match &ctx.cfg.paths.records {
        Some(p) => p.clone(),
        None => {
            let (_, files) = stage("synth-corpus", &started, || cmd::synth_corpus_cmd(ctx))?;
            outputs.extend(files);
            ctx.path(cmd::RECORDS)
        }
    };
    let (dataset, files) = stage("build-dataset", &started, || cmd::build_dataset_cmd(ctx, &records))?;
    outputs.extend(files);
    let has_fixed = dataset.fixed_rows > 0;

    let (selected_variable, files) = stage("select-features", &started, || cmd::select_features_cmd(ctx, Target::Variable))?;
    outputs.extend(files);
    let mut selected_fixed = Vec::new();
    if has_fixed {
        let (sel, files) = stage("select-features", &started, || cmd::select_features_cmd(ctx, Target::Fixed))?;
        selected_fixed = sel;
        outputs.extend(files);
    }

    let (search_variable, files) = stage("search-gpr", &started, || cmd::search_gpr_cmd(ctx, Target::Variable))?;
    outputs.extend(files);
    let search_fixed = if has_fixed && !selected_fixed.is_empty() {
        let (s, files) = stage("search-gpr", &started, || cmd::search_gpr_cmd(ctx, Target::Fixed))?;
        outputs.extend(files);
        Some(s)
    } else {
        eprintln!("note: stage 1 of screening uses the variable-temperature ensemble");
        None
    };

    let (generated, files) = stage("generate", &started, || cmd::generate_cmd(ctx))?;
    outputs.extend(files);

    let candidates = ctx.cfg.paths.candidates.clone().unwrap_or_else(|| ctx.path(cmd::GENERATED));
    let stage2 = ctx.path(&Target::Variable.ensemble());
    let stage1 = if search_fixed.is_some() { ctx.path(&Target::Fixed.ensemble()) } else { stage2.clone() };
    let (screen, files) = stage("screen", &started, || cmd::screen_cmd(ctx, &candidates, &stage1, &stage2))?;
    outputs.extend(files);

    let (chemspace, files) = stage("embed-cluster", &started, || cmd::embed_cluster_cmd(ctx, &ctx.path(cmd::SCREEN)))?;
    outputs.extend(files);
    let (_, files) = stage("plot", &started, || {
        cmd::plot_cmd(ctx, &ctx.path(cmd::EMBEDDING), Some(&ctx.path(cmd::CLUSTERS)))
    })?;
    outputs.extend(files);

    let summary = RunSummary {
        seed: ctx.cfg.seed,
        synthetic_records: synthetic,
        dataset,
        selected_variable,
        selected_fixed,
        search_variable,
        search_fixed,
        generated,
        screen,
        chemspace,
    };
    let path = ctx.path(SUMMARY);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
    crate::io::write_bytes(&path, text.as_bytes())?;
    outputs.push(path);
    Ok((summary, outputs))
}

/// Output files a pipeline run compares for determinism.
pub fn comparable_outputs(out: &Path) -> Vec<PathBuf> {
    [
        cmd::RECORDS,
        "dataset.csv",
        "features.csv",
        "dataset_fixed.csv",
        "features_fixed.csv",
        "selection_report.csv",
        "selection_report_fixed.csv",
        "search_report.csv",
        "search_report_fixed.csv",
        cmd::GENERATED,
        cmd::SCREEN,
        cmd::EMBEDDING,
        cmd::CLUSTERS,
        cmd::PLOT,
        SUMMARY,
    ]
    .iter()
    .map(|f| out.join(f))
    .filter(|p| p.exists())
    .collect()
}

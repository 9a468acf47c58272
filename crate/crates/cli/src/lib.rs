//! Command-line front end: configuration, subcommands, CSV and SVG output,
//! run manifests and the end-to-end pipeline.

pub mod commands;
pub mod config;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::{Context, Target};
use config::{GeneratorSection, PipelineConfig};
use manifest::Manifest;

/// Exit status for invalid usage, configuration or input files.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit status for failures while computing.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: &'static str, source: Box<CliError> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Stage { source, .. } => source.exit_code(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "volscreen", version, about = "Vapor-pressure modelling and low-volatility candidate screening")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: VOLSCREEN_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit Antoine parameters to raw (T, log10 Pa) points.
    FitAntoine {
        /// CSV `id,smiles,temperature_K,log10_vp_pa[,exclude]`.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Write a synthetic Antoine corpus of generated structures.
    SynthCorpus {
        #[arg(long)]
        molecules: Option<usize>,
    },
    /// Filter records and build the partitioned datasets and features.
    BuildDataset {
        /// CSV `id,smiles,A,B,C,t_min_K,t_max_K` (bar, K).
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        fixed_temperature: Option<f64>,
    },
    /// Correlation filter plus per-fold LASSO feature selection.
    SelectFeatures {
        #[arg(long, value_enum, default_value_t = Target::Variable)]
        target: Target,
        #[arg(long)]
        r2_threshold: Option<f64>,
        #[arg(long)]
        inner_folds: Option<usize>,
    },
    /// Staged GPR subset search and ensemble assembly.
    SearchGpr {
        #[arg(long, value_enum, default_value_t = Target::Variable)]
        target: Target,
        #[arg(long)]
        min_k: Option<usize>,
        #[arg(long)]
        max_k: Option<usize>,
        #[arg(long)]
        ensemble_size: Option<usize>,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Ensemble predictions for a SMILES list at given temperatures.
    Predict {
        #[arg(long)]
        ensemble: Option<PathBuf>,
        #[arg(long)]
        smiles: PathBuf,
        #[arg(long = "temperature", required = true)]
        temperatures: Vec<f64>,
    },
    /// Exact Shapley attributions of each ensemble member.
    Shap {
        #[arg(long, value_enum, default_value_t = Target::Variable)]
        target: Target,
        #[arg(long)]
        ensemble: Option<PathBuf>,
        #[arg(long)]
        smiles: PathBuf,
        #[arg(long, default_value_t = 300.0)]
        temperature: f64,
        /// Background rows drawn from the training partitions.
        #[arg(long, default_value_t = 32)]
        background: usize,
    },
    /// Grow candidate molecules.
    Generate {
        #[arg(long)]
        count: Option<u64>,
        /// `fg_off` or `fg_on`.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        p_cyclic: Option<f64>,
        #[arg(long)]
        p_functional_group: Option<f64>,
    },
    /// Two-stage vapor-pressure screen of candidate SMILES.
    Screen {
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long)]
        stage1_ensemble: Option<PathBuf>,
        #[arg(long)]
        stage2_ensemble: Option<PathBuf>,
    },
    /// t-SNE embedding and DBSCAN clustering of screened molecules.
    EmbedCluster {
        #[arg(long)]
        screen: Option<PathBuf>,
        #[arg(long)]
        perplexity: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
        #[arg(long)]
        metric: Option<String>,
        /// `pass`, `stage1` or `all`.
        #[arg(long)]
        embed: Option<String>,
    },
    /// SVG scatter of an embedding.
    Plot {
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long)]
        clusters: Option<PathBuf>,
    },
    /// Every stage end to end.
    Run {
        /// Antoine records CSV; without one a synthetic corpus is written first.
        #[arg(long)]
        records: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FitAntoine { .. } => "fit-antoine",
            Command::SynthCorpus { .. } => "synth-corpus",
            Command::BuildDataset { .. } => "build-dataset",
            Command::SelectFeatures { .. } => "select-features",
            Command::SearchGpr { .. } => "search-gpr",
            Command::Predict { .. } => "predict",
            Command::Shap { .. } => "shap",
            Command::Generate { .. } => "generate",
            Command::Screen { .. } => "screen",
            Command::EmbedCluster { .. } => "embed-cluster",
            Command::Plot { .. } => "plot",
            Command::Run { .. } => "run",
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Effective configuration: file (or defaults), then global flags, then the
/// subcommand's overrides.
pub fn resolve_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.out, cli.out.clone());
    set(&mut cfg.threads, cli.threads);
    match &cli.command {
        Command::FitAntoine { points } => set(&mut cfg.paths.points, points.clone().map(Some)),
        Command::SynthCorpus { molecules } => set(&mut cfg.synthetic.molecules, *molecules),
        Command::BuildDataset { records, samples, folds, fixed_temperature } => {
            set(&mut cfg.paths.records, records.clone().map(Some));
            set(&mut cfg.dataset.samples, *samples);
            set(&mut cfg.dataset.folds, *folds);
            set(&mut cfg.dataset.fixed_temperature_k, *fixed_temperature);
        }
        Command::SelectFeatures { r2_threshold, inner_folds, .. } => {
            set(&mut cfg.featsel.r2_threshold, *r2_threshold);
            set(&mut cfg.featsel.inner_folds, *inner_folds);
        }
        Command::SearchGpr { min_k, max_k, ensemble_size, starts, .. } => {
            set(&mut cfg.search.min_k, *min_k);
            set(&mut cfg.search.max_k, *max_k);
            set(&mut cfg.search.ensemble_size, *ensemble_size);
            set(&mut cfg.search.starts, *starts);
        }
        Command::Generate { count, preset, p_cyclic, p_functional_group } => {
            let g = &cfg.generator;
            let mut overrides = toml::Table::new();
            if let Some(p) = p_cyclic {
                overrides.insert("p_cyclic".into(), toml::Value::Float(*p));
            }
            if let Some(p) = p_functional_group {
                overrides.insert("p_functional_group".into(), toml::Value::Float(*p));
            }
            cfg.generator = match preset {
                // a new preset replaces the configured growth parameters
                Some(name) => GeneratorSection::with_overrides(name, count.unwrap_or(g.count), overrides),
                None => {
                    let mut base = toml::Table::try_from(&g.growth).expect("growth config serializes");
                    base.extend(overrides);
                    let preset = g.preset.clone();
                    GeneratorSection::with_overrides(&preset, count.unwrap_or(g.count), base)
                }
            }
            .map_err(CliError::Validation)?;
        }
        Command::Screen { candidates, .. } => set(&mut cfg.paths.candidates, candidates.clone().map(Some)),
        Command::EmbedCluster { perplexity, eps, min_pts, metric, embed, .. } => {
            set(&mut cfg.chemspace.perplexity, *perplexity);
            set(&mut cfg.chemspace.eps, eps.map(Some));
            set(&mut cfg.chemspace.min_pts, *min_pts);
            set(&mut cfg.chemspace.metric, metric.clone());
            set(&mut cfg.chemspace.embed, embed.clone());
        }
        Command::Run { records } => set(&mut cfg.paths.records, records.clone().map(Some)),
        Command::Predict { .. } | Command::Shap { .. } | Command::Plot { .. } => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn thread_count(cfg: &PipelineConfig) -> Result<usize, CliError> {
    if cfg.threads > 0 {
        return Ok(cfg.threads);
    }
    match std::env::var("VOLSCREEN_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("VOLSCREEN_THREADS must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn required(path: Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    path.ok_or_else(|| CliError::Validation(format!("{what} is required (flag or config)")))
}

/// Executes a parsed command and writes its manifest.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli)?;
    let threads = thread_count(&cfg)?;
    // a pool may already exist when called repeatedly in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let ctx = Context { cfg };
    let name = cli.command.name();
    let outputs = match cli.command {
        Command::FitAntoine { .. } => {
            let points = required(ctx.cfg.paths.points.clone(), "--points")?;
            let (s, files) = commands::fit_antoine_cmd(&ctx, &points)?;
            println!("fitted {} of {} molecules", s.fitted, s.molecules);
            files
        }
        Command::SynthCorpus { .. } => {
            let (n, files) = commands::synth_corpus_cmd(&ctx)?;
            println!("wrote {n} synthetic records");
            files
        }
        Command::BuildDataset { .. } => {
            let records = required(ctx.cfg.paths.records.clone(), "--records")?;
            let (s, files) = commands::build_dataset_cmd(&ctx, &records)?;
            println!(
                "{} records, {} kept; {} variable rows, {} fixed rows",
                s.records, s.kept, s.variable_rows, s.fixed_rows
            );
            files
        }
        Command::SelectFeatures { target, .. } => {
            let (selected, files) = commands::select_features_cmd(&ctx, target)?;
            println!("selected {}: {}", selected.len(), selected.join(","));
            files
        }
        Command::SearchGpr { target, .. } => {
            let (s, files) = commands::search_gpr_cmd(&ctx, target)?;
            println!(
                "{} subsets -> {} -> {} -> {} kept; ensemble of {}",
                s.subsets, s.stage1_survivors, s.stage2_survivors, s.kept, s.ensemble_size
            );
            if let Some(h) = s.ensemble_holdout {
                println!("ensemble holdout R2 {:.4} RMSE {:.4} MAE {:.4} MAPE {:.2}%", h.r2, h.rmse, h.mae, h.mape);
            }
            files
        }
        Command::Predict { ensemble, smiles, temperatures } => {
            let ens = ensemble.unwrap_or_else(|| ctx.path(&Target::Variable.ensemble()));
            let (n, files) = commands::predict_cmd(&ctx, &ens, &smiles, &temperatures)?;
            println!("{n} predictions");
            files
        }
        Command::Shap { target, ensemble, smiles, temperature, background } => {
            let ens = ensemble.unwrap_or_else(|| ctx.path(&target.ensemble()));
            let (n, files) = commands::shap_cmd(&ctx, target, &ens, &smiles, temperature, background)?;
            println!("{n} attributions");
            files
        }
        Command::Generate { .. } => {
            let (n, files) = commands::generate_cmd(&ctx)?;
            println!("generated {n} molecules");
            files
        }
        Command::Screen { stage1_ensemble, stage2_ensemble, .. } => {
            let candidates = ctx.cfg.paths.candidates.clone().unwrap_or_else(|| ctx.path(commands::GENERATED));
            let stage2 = stage2_ensemble.unwrap_or_else(|| ctx.path(&Target::Variable.ensemble()));
            let stage1 = stage1_ensemble.unwrap_or_else(|| {
                let fixed = ctx.path(&Target::Fixed.ensemble());
                if fixed.exists() {
                    fixed
                } else {
                    stage2.clone()
                }
            });
            let (s, files) = commands::screen_cmd(&ctx, &candidates, &stage1, &stage2)?;
            println!("{} candidates -> {} after stage 1 -> {} passed", s.candidates, s.stage1_survivors, s.passed);
            files
        }
        Command::EmbedCluster { screen, .. } => {
            let screen = screen.unwrap_or_else(|| ctx.path(commands::SCREEN));
            let (s, files) = commands::embed_cluster_cmd(&ctx, &screen)?;
            println!("{} embedded, {} clusters, {} noise", s.embedded, s.clusters, s.noise);
            files
        }
        Command::Plot { embedding, clusters } => {
            let embedding = embedding.unwrap_or_else(|| ctx.path(commands::EMBEDDING));
            let clusters = clusters.or_else(|| Some(ctx.path(commands::CLUSTERS)).filter(|p| p.exists()));
            let (n, files) = commands::plot_cmd(&ctx, &embedding, clusters.as_deref())?;
            println!("plotted {n} points");
            files
        }
        Command::Run { .. } => {
            let (s, files) = pipeline::run_end_to_end(&ctx)?;
            println!("{}", s.text());
            files
        }
    };
    Manifest::build(name, &ctx.cfg, &outputs)?.write(ctx.out())?;
    Ok(())
}

/// Parses arguments and runs; returns the process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! Pipeline configuration read from a TOML file. Every section is optional;
//! missing keys fall back to the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use volscreen::chemgraph::SimilarityMetric;
use volscreen::featsel::{SelectionConfig, TEMPERATURE_FEATURE};
use volscreen::molgen::GrowthConfig;
use volscreen::screen::{ScreenConfig, STAGE1_MAX_LOG10, STAGE1_TEMPERATURE_K, STAGE2_MAX_PA, STAGE2_TEMPERATURE_K};
use volscreen::subsearch::SearchConfig;
use volscreen::synth::CorpusConfig;
use volscreen::vapordata::{DEFAULT_SAMPLES, FIXED_TEMPERATURE_K, MIN_SEPARATION_K};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 uses `VOLSCREEN_THREADS` or all cores.
    pub threads: usize,
    pub out: PathBuf,
    pub paths: Paths,
    pub synthetic: Synthetic,
    pub dataset: DatasetSection,
    pub featsel: FeatselSection,
    pub search: SearchSection,
    pub generator: GeneratorSection,
    pub screen: ScreenSection,
    pub chemspace: ChemspaceSection,
    pub plot: PlotSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            threads: 0,
            out: PathBuf::from("out"),
            paths: Paths::default(),
            synthetic: Synthetic::default(),
            dataset: DatasetSection::default(),
            featsel: FeatselSection::default(),
            search: SearchSection::default(),
            generator: GeneratorSection::default(),
            screen: ScreenSection::default(),
            chemspace: ChemspaceSection::default(),
            plot: PlotSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Antoine records (`id,smiles,A,B,C,t_min_K,t_max_K`). When unset,
    /// `run` writes and uses a synthetic corpus.
    pub records: Option<PathBuf>,
    /// Raw vapor-pressure points for `fit-antoine`.
    pub points: Option<PathBuf>,
    /// Candidate SMILES for `screen`; defaults to the generator output.
    pub candidates: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Synthetic {
    pub molecules: usize,
    pub mw_min: f64,
    pub mw_max: f64,
}

impl Default for Synthetic {
    fn default() -> Self {
        let c = CorpusConfig::default();
        Synthetic { molecules: c.molecules, mw_min: c.mw_range.0, mw_max: c.mw_range.1 }
    }
}

impl Synthetic {
    pub fn corpus(&self) -> CorpusConfig {
        CorpusConfig { molecules: self.molecules, mw_range: (self.mw_min, self.mw_max), ..CorpusConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub samples: usize,
    pub min_separation_k: f64,
    pub fixed_temperature_k: f64,
    pub folds: usize,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            samples: DEFAULT_SAMPLES,
            min_separation_k: MIN_SEPARATION_K,
            fixed_temperature_k: FIXED_TEMPERATURE_K,
            folds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatselSection {
    pub r2_threshold: f64,
    pub inner_folds: usize,
    /// Kept unconditionally in the variable-temperature selection.
    pub keep_temperature: bool,
}

impl Default for FeatselSection {
    fn default() -> Self {
        let d = SelectionConfig::default();
        FeatselSection { r2_threshold: d.r2_threshold, inner_folds: d.inner_folds, keep_temperature: true }
    }
}

impl FeatselSection {
    pub fn selection(&self, with_temperature: bool) -> SelectionConfig {
        SelectionConfig {
            r2_threshold: self.r2_threshold,
            inner_folds: self.inner_folds,
            always_keep: if with_temperature && self.keep_temperature {
                vec![TEMPERATURE_FEATURE.to_string()]
            } else {
                Vec::new()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub min_k: usize,
    pub max_k: usize,
    pub stage1_min_r2: f64,
    pub stage2_min_r2: f64,
    pub final_min_r2: f64,
    pub ensemble_size: usize,
    pub starts: usize,
    pub checkpoint_every: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        let d = SearchConfig::default();
        SearchSection {
            min_k: d.min_k,
            max_k: d.max_k,
            stage1_min_r2: d.stage1_min_r2,
            stage2_min_r2: d.stage2_min_r2,
            final_min_r2: d.final_min_r2,
            ensemble_size: d.ensemble_size,
            starts: d.starts,
            checkpoint_every: d.checkpoint_every,
        }
    }
}

impl SearchSection {
    pub fn search(&self, seed: u64) -> SearchConfig {
        SearchConfig {
            min_k: self.min_k,
            max_k: self.max_k,
            stage1_min_r2: self.stage1_min_r2,
            stage2_min_r2: self.stage2_min_r2,
            final_min_r2: self.final_min_r2,
            ensemble_size: self.ensemble_size,
            seed,
            starts: self.starts,
            checkpoint_every: self.checkpoint_every,
            ..SearchConfig::default()
        }
    }
}

/// `[generator]`: `count`, an optional `preset` (`fg_off` or `fg_on`) and
/// any growth parameter, which overrides the preset's value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "toml::Table", into = "toml::Table")]
pub struct GeneratorSection {
    pub count: u64,
    pub preset: String,
    pub growth: GrowthConfig,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        GeneratorSection { count: 1000, preset: "fg_off".into(), growth: GrowthConfig::fg_off() }
    }
}

impl GeneratorSection {
    /// Rebuilds the growth parameters from a preset plus explicit overrides.
    pub fn with_overrides(preset: &str, count: u64, overrides: toml::Table) -> Result<GeneratorSection, String> {
        let base = GrowthConfig::preset(preset).ok_or_else(|| format!("unknown generator preset {preset:?}"))?;
        let mut table = toml::Table::try_from(&base).map_err(|e| e.to_string())?;
        for (k, v) in overrides {
            if !table.contains_key(&k) {
                return Err(format!("unknown generator key {k:?}"));
            }
            table.insert(k, v);
        }
        let growth: GrowthConfig = table.try_into().map_err(|e: toml::de::Error| e.to_string())?;
        growth.validate().map_err(|e| e.to_string())?;
        Ok(GeneratorSection { count, preset: preset.to_string(), growth })
    }
}

impl TryFrom<toml::Table> for GeneratorSection {
    type Error = String;

    fn try_from(mut t: toml::Table) -> Result<Self, Self::Error> {
        let d = GeneratorSection::default();
        let count = match t.remove("count") {
            Some(v) => v.as_integer().filter(|c| *c >= 0).ok_or("generator.count must be a non-negative integer")? as u64,
            None => d.count,
        };
        let preset = match t.remove("preset") {
            Some(v) => v.as_str().ok_or("generator.preset must be a string")?.to_string(),
            None => d.preset,
        };
        GeneratorSection::with_overrides(&preset, count, t)
    }
}

impl From<GeneratorSection> for toml::Table {
    fn from(g: GeneratorSection) -> toml::Table {
        let mut t = toml::Table::new();
        t.insert("count".into(), toml::Value::Integer(g.count as i64));
        t.insert("preset".into(), toml::Value::String(g.preset));
        t.extend(toml::Table::try_from(&g.growth).expect("growth config serializes"));
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreenSection {
    pub stage1_temperature_k: f64,
    pub stage1_max_log10: f64,
    pub stage2_temperature_k: f64,
    pub stage2_max_pa: f64,
}

impl Default for ScreenSection {
    fn default() -> Self {
        ScreenSection {
            stage1_temperature_k: STAGE1_TEMPERATURE_K,
            stage1_max_log10: STAGE1_MAX_LOG10,
            stage2_temperature_k: STAGE2_TEMPERATURE_K,
            stage2_max_pa: STAGE2_MAX_PA,
        }
    }
}

impl ScreenSection {
    pub fn screen(&self) -> ScreenConfig {
        ScreenConfig {
            stage1_temperature: self.stage1_temperature_k,
            stage1_max_log10: self.stage1_max_log10,
            stage2_temperature: self.stage2_temperature_k,
            stage2_max_log10: self.stage2_max_pa.log10(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChemspaceSection {
    pub metric: String,
    pub radius: u32,
    pub nbits: usize,
    pub perplexity: f64,
    pub iterations: usize,
    /// DBSCAN radius in embedded units; unset means the `eps_quantile` of
    /// each point's `eps_neighbors`-th nearest-neighbor distance.
    pub eps: Option<f64>,
    pub eps_neighbors: usize,
    pub eps_quantile: f64,
    pub min_pts: usize,
    /// Which screened molecules to embed: `pass`, `stage1` or `all`.
    pub embed: String,
}

impl Default for ChemspaceSection {
    fn default() -> Self {
        ChemspaceSection {
            metric: SimilarityMetric::RogersTanimoto.name().to_string(),
            radius: 2,
            nbits: 2048,
            perplexity: 30.0,
            iterations: 1000,
            eps: None,
            eps_neighbors: 10,
            eps_quantile: 0.9,
            min_pts: 10,
            embed: "pass".into(),
        }
    }
}

impl ChemspaceSection {
    pub fn metric(&self) -> Result<SimilarityMetric, CliError> {
        self.metric.parse().map_err(CliError::Validation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotSection {
    pub width: u32,
    pub height: u32,
    pub marker_radius: f64,
}

impl Default for PlotSection {
    fn default() -> Self {
        PlotSection { width: 800, height: 600, marker_radius: 3.0 }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        PipelineConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<PipelineConfig, CliError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.dataset.folds < 2 {
            return bad(format!("dataset.folds must be at least 2, got {}", self.dataset.folds));
        }
        if self.search.min_k == 0 || self.search.min_k > self.search.max_k {
            return bad(format!("search k range {}..={} is empty", self.search.min_k, self.search.max_k));
        }
        if !(self.screen.stage2_max_pa > 0.0) {
            return bad("screen.stage2_max_pa must be positive".into());
        }
        if !["pass", "stage1", "all"].contains(&self.chemspace.embed.as_str()) {
            return bad(format!("chemspace.embed must be pass, stage1 or all, got {:?}", self.chemspace.embed));
        }
        if self.chemspace.min_pts == 0 || self.chemspace.eps_neighbors == 0 {
            return bad("chemspace.min_pts and chemspace.eps_neighbors must be positive".into());
        }
        if self.chemspace.eps.is_some_and(|e| !(e > 0.0)) {
            return bad("chemspace.eps must be positive".into());
        }
        if !(self.chemspace.perplexity > 0.0) {
            return bad("chemspace.perplexity must be positive".into());
        }
        self.chemspace.metric()?;
        Ok(())
    }

    /// Canonical TOML text; the manifest hashes this.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_default() {
        assert_eq!(PipelineConfig::parse("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn generator_overrides_preset() {
        let cfg = PipelineConfig::parse("[generator]\npreset = \"fg_on\"\ncount = 5\nchain_max = 10\n").unwrap();
        assert_eq!(cfg.generator.count, 5);
        assert_eq!(cfg.generator.growth.p_functional_group, 0.02);
        assert_eq!(cfg.generator.growth.chain_max, 10);
        assert!(PipelineConfig::parse("[generator]\nbogus = 1\n").is_err());
        assert!(PipelineConfig::parse("[generator]\np_cyclic = 2.0\n").is_err());
    }

    #[test]
    fn round_trip_and_hash() {
        let mut cfg = PipelineConfig::default();
        cfg.generator = GeneratorSection::with_overrides("fg_on", 7, toml::Table::new()).unwrap();
        let back = PipelineConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        let mut other = cfg.clone();
        other.seed = 1;
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn unknown_section_rejected() {
        assert!(matches!(PipelineConfig::parse("[nope]\n"), Err(CliError::Validation(_))));
        assert!(PipelineConfig::parse("[chemspace]\nembed = \"some\"\n").is_err());
    }
}

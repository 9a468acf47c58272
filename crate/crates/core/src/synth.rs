//! Seeded synthetic problems with a known generating structure.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::chemgraph::{composition, static_descriptors, to_smiles};
use crate::featsel::FeatureMatrix;
use crate::molgen::{generate, GrowthConfig, MolgenError};
use crate::vapordata::{
    stratified_group_split, AntoineParams, AntoineRecord, Dataset, Partition, VaporError, VpInstance, MIN_CARBON,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub molecules: usize,
    /// Temperatures sampled per molecule.
    pub temperatures: usize,
    pub decoys: usize,
    pub noise_std: f64,
    pub t_range: (f64, f64),
    pub folds: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            molecules: 120,
            temperatures: 2,
            decoys: 48,
            noise_std: 0.1,
            t_range: (300.0, 400.0),
            folds: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryData {
    pub x: FeatureMatrix,
    pub y: Vec<f64>,
    pub labels: Vec<Partition>,
    pub molecule_ids: Vec<String>,
    /// Names of the generating features.
    pub truth: Vec<String>,
}

/// Generating function in terms of the two molecular features and the
/// centred temperature. No proper subset of the three inputs explains more
/// than about 60% of its variance.
pub fn recovery_target(x1: f64, x2: f64, t: f64) -> f64 {
    x1 + x2 + t + x1 * t + x2 * t
}

/// Molecules carry `x1`, `x2` and `decoys` unrelated N(0,1) descriptors
/// (`d00`, `d01`, ...); each instance adds a temperature `T`. Rows of one
/// molecule share a partition.
pub fn recovery_dataset(cfg: &RecoveryConfig, seed: u64) -> Result<RecoveryData, VaporError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.noise_std).expect("finite noise");
    let (t_lo, t_hi) = cfg.t_range;
    let t_mid = 0.5 * (t_lo + t_hi);
    // uniform width scaled to unit variance
    let t_scale = (t_hi - t_lo) / 12f64.sqrt();

    let width = 3 + cfg.decoys;
    let n = cfg.molecules * cfg.temperatures;
    let mut data = DMatrix::zeros(n, width);
    let mut y = Vec::with_capacity(n);
    let mut instances = Vec::with_capacity(n);
    let mut molecule_ids = Vec::with_capacity(n);
    for m in 0..cfg.molecules {
        let id = format!("m{m:04}");
        let desc: Vec<f64> = (0..2 + cfg.decoys).map(|_| StandardNormal.sample(&mut rng)).collect();
        for _ in 0..cfg.temperatures {
            let row = molecule_ids.len();
            let temp = rng.random_range(t_lo..t_hi);
            let t = (temp - t_mid) / t_scale;
            data[(row, 0)] = desc[0];
            data[(row, 1)] = desc[1];
            data[(row, 2)] = temp;
            for (j, v) in desc[2..].iter().enumerate() {
                data[(row, 3 + j)] = *v;
            }
            let target = recovery_target(desc[0], desc[1], t) + noise.sample(&mut rng);
            y.push(target);
            instances.push(VpInstance { molecule_id: id.clone(), temperature: temp, y: target });
            molecule_ids.push(id.clone());
        }
    }
    let names: Vec<String> = ["x1", "x2", "T"]
        .iter()
        .map(|s| s.to_string())
        .chain((0..cfg.decoys).map(|j| format!("d{j:02}")))
        .collect();
    let dataset = Dataset { instances };
    let split = stratified_group_split(&dataset, cfg.folds, true, seed ^ 0x5eed)?;
    let labels = split.labels_for(&dataset).expect("every molecule is assigned");
    Ok(RecoveryData {
        x: FeatureMatrix::new(names, data).expect("generated columns are finite and unique"),
        y,
        labels,
        molecule_ids,
        truth: vec!["x1".into(), "x2".into(), "T".into()],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub molecules: usize,
    /// Growth stops once a molecule exceeds a limit drawn uniformly from here.
    pub mw_range: (f64, f64),
    /// Standard deviation of the per-molecule A offset.
    pub a_noise: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { molecules: 120, mw_range: (100.0, 650.0), a_noise: 0.05 }
    }
}

/// Antoine records for generated structures whose parameters follow a hidden
/// smooth function of size, oxygen content and H-bond donors.
///
/// Candidates with fewer than six carbons or a repeated canonical SMILES are
/// skipped, so every returned record survives the composition filter.
pub fn antoine_corpus(cfg: &CorpusConfig, seed: u64) -> Result<Vec<AntoineRecord>, MolgenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa170);
    let noise = Normal::new(0.0, cfg.a_noise.max(0.0)).expect("finite noise");
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(cfg.molecules);
    let mut index = 0u64;
    while out.len() < cfg.molecules {
        let growth = GrowthConfig {
            mw_max: rng.random_range(cfg.mw_range.0..cfg.mw_range.1),
            p_functional_group: 0.05,
            ..GrowthConfig::default()
        };
        let g = generate(seed, index, &growth)?;
        index += 1;
        let comp = composition(&g.mol);
        let smiles = to_smiles(&g.mol);
        if comp.carbon < MIN_CARBON || !seen.insert(smiles.clone()) {
            continue;
        }
        let d = static_descriptors(&g.mol);
        let (mw, oxygen, donors) = (d[0], d[3], d[10]);
        let a = 9.2 + noise.sample(&mut rng);
        let b = 250.0 + 10.5 * mw + 40.0 * oxygen + 250.0 * donors;
        let c = -45.0 - 0.03 * mw;
        let t_min = rng.random_range(280.0..330.0);
        let t_max = t_min + rng.random_range(40.0..120.0);
        let params = AntoineParams::new(a, b, c, t_min, t_max).expect("T + C stays positive");
        out.push(AntoineRecord { id: format!("syn{:04}", out.len()), smiles, params });
    }
    Ok(out)
}

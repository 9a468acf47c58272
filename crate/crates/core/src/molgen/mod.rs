//! Seeded fragment-growth generator for candidate molecules.

mod fragments;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chemgraph::{mol_weight, to_smiles, ChemError, Element, MolGraph};

pub use fragments::{alkyl_chain, fragment, Fragment, CYCLIC_NAMES, FUNCTIONAL_GROUP_NAMES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MolgenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("unknown fragment {0:?}")]
    UnknownFragment(String),
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error("trace replay: {0}")]
    Replay(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub p_cyclic: f64,
    pub p_functional_group: f64,
    pub chain_mean: f64,
    pub chain_std: f64,
    pub chain_min: usize,
    pub chain_max: usize,
    pub mw_max: f64,
    pub atom_max: usize,
    /// Count implicit hydrogens toward `atom_max`.
    pub count_hydrogens: bool,
    pub seed_cyclic_probability: f64,
    pub cyclic_fragments: Vec<String>,
    pub functional_groups: Vec<String>,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig::fg_off()
    }
}

impl GrowthConfig {
    /// Growth without functional groups.
    pub fn fg_off() -> GrowthConfig {
        GrowthConfig {
            p_cyclic: 0.05,
            p_functional_group: 0.0,
            chain_mean: 7.0,
            chain_std: 3.0,
            chain_min: 3,
            chain_max: 12,
            mw_max: 600.0,
            atom_max: 200,
            count_hydrogens: true,
            seed_cyclic_probability: 0.5,
            cyclic_fragments: CYCLIC_NAMES.iter().map(|s| s.to_string()).collect(),
            functional_groups: FUNCTIONAL_GROUP_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Growth with a 2% functional-group action.
    pub fn fg_on() -> GrowthConfig {
        GrowthConfig { p_functional_group: 0.02, ..GrowthConfig::fg_off() }
    }

    pub fn preset(name: &str) -> Option<GrowthConfig> {
        match name {
            "fg_off" => Some(GrowthConfig::fg_off()),
            "fg_on" => Some(GrowthConfig::fg_on()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), MolgenError> {
        let bad = |m: &str| Err(MolgenError::InvalidConfig(m.to_string()));
        for (name, p) in [
            ("p_cyclic", self.p_cyclic),
            ("p_functional_group", self.p_functional_group),
            ("seed_cyclic_probability", self.seed_cyclic_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.p_cyclic + self.p_functional_group > 1.0 {
            return bad("p_cyclic + p_functional_group exceeds 1");
        }
        if self.chain_min == 0 || self.chain_min > self.chain_max {
            return bad("chain bounds must satisfy 1 <= chain_min <= chain_max");
        }
        if !self.chain_mean.is_finite() || !(self.chain_std >= 0.0) || !self.chain_std.is_finite() {
            return bad("chain_mean must be finite and chain_std non-negative");
        }
        if !(self.mw_max > 0.0) || self.atom_max == 0 {
            return bad("stop limits must be positive");
        }
        if self.cyclic_fragments.is_empty() || self.functional_groups.is_empty() {
            return bad("fragment sets must be non-empty");
        }
        for name in self.cyclic_fragments.iter().chain(&self.functional_groups) {
            fragment(name).ok_or_else(|| MolgenError::UnknownFragment(name.clone()))?;
        }
        Ok(())
    }

    fn atom_count(&self, mol: &MolGraph) -> usize {
        if self.count_hydrogens {
            mol.total_atom_count()
        } else {
            mol.atom_count()
        }
    }

    /// True once either growth limit is exceeded.
    pub fn limit_exceeded(&self, mol: &MolGraph) -> bool {
        mol_weight(mol) > self.mw_max || self.atom_count(mol) > self.atom_max
    }

    /// Largest weight and atom count a single growth step can add.
    pub fn max_increment(&self) -> (f64, usize) {
        let chain = alkyl_chain(self.chain_max);
        let chain_w = mol_weight(&chain) - 2.0 * crate::chemgraph::H_WEIGHT;
        let chain_a = if self.count_hydrogens { chain.total_atom_count() - 2 } else { chain.atom_count() };
        self.cyclic_fragments
            .iter()
            .chain(&self.functional_groups)
            .filter_map(|n| fragment(n))
            .fold((chain_w, chain_a), |(w, a), f| {
                (w.max(f.weight_increment()), a.max(f.atom_increment(self.count_hydrogens)))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Seed,
    Chain,
    Cyclic,
    Fg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthStep {
    pub step: usize,
    pub action: Action,
    /// Atom of the growing molecule that lost a hydrogen; none for the seed.
    pub site: Option<usize>,
    /// Library name, or `chain:N` for an N-carbon alkyl chain.
    pub fragment: String,
    pub attach: usize,
    pub draws: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTrace {
    pub index: u64,
    pub smiles: String,
    pub steps: Vec<GrowthStep>,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub mol: MolGraph,
    pub smiles: String,
    pub trace: GrowthTrace,
}

/// Gaussian chain length rounded to the nearest integer, redrawn while out
/// of bounds; clamped after 100 rejected draws.
pub fn sample_chain_length<R: Rng>(rng: &mut R, cfg: &GrowthConfig, draws: &mut Vec<f64>) -> usize {
    let normal = Normal::new(cfg.chain_mean, cfg.chain_std).expect("validated chain distribution");
    let (lo, hi) = (cfg.chain_min as f64, cfg.chain_max as f64);
    let mut last = cfg.chain_mean.round();
    for _ in 0..100 {
        let v: f64 = normal.sample(rng);
        draws.push(v);
        last = v.round();
        if (lo..=hi).contains(&last) {
            return last as usize;
        }
    }
    last.clamp(lo, hi) as usize
}

fn pick_index<R: Rng>(rng: &mut R, len: usize, draws: &mut Vec<f64>) -> usize {
    let u: f64 = rng.random();
    draws.push(u);
    ((u * len as f64) as usize).min(len - 1)
}

fn resolve(name: &str) -> Result<(MolGraph, &'static [usize]), MolgenError> {
    static ZERO: [usize; 1] = [0];
    if let Some(n) = name.strip_prefix("chain:") {
        let n: usize = n.parse().map_err(|_| MolgenError::UnknownFragment(name.to_string()))?;
        if n == 0 {
            return Err(MolgenError::UnknownFragment(name.to_string()));
        }
        return Ok((alkyl_chain(n), &ZERO));
    }
    let f = fragment(name).ok_or_else(|| MolgenError::UnknownFragment(name.to_string()))?;
    Ok((f.graph.clone(), &f.attach_atoms))
}

/// Carbon atoms carrying hydrogen, with their hydrogen counts.
fn growth_sites(mol: &MolGraph) -> Vec<(usize, usize)> {
    mol.atoms()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.element == Element::C && a.implicit_h > 0)
        .map(|(i, a)| (i, a.implicit_h as usize))
        .collect()
}

/// Grows molecule `index` from the stream `index` of the master `seed`.
pub fn generate(seed: u64, index: u64, cfg: &GrowthConfig) -> Result<Generated, MolgenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);

    let mut draws = Vec::new();
    let u: f64 = rng.random();
    draws.push(u);
    let name = if u < cfg.seed_cyclic_probability {
        let k = pick_index(&mut rng, cfg.cyclic_fragments.len(), &mut draws);
        cfg.cyclic_fragments[k].clone()
    } else {
        format!("chain:{}", sample_chain_length(&mut rng, cfg, &mut draws))
    };
    let mut mol = resolve(&name)?.0;
    let mut steps = vec![GrowthStep { step: 0, action: Action::Seed, site: None, fragment: name, attach: 0, draws }];

    while !cfg.limit_exceeded(&mol) {
        let sites = growth_sites(&mol);
        if sites.is_empty() {
            break;
        }
        let mut draws = Vec::new();
        // hydrogen-weighted site choice
        let total: usize = sites.iter().map(|s| s.1).sum();
        let u: f64 = rng.random();
        draws.push(u);
        let mut target = ((u * total as f64) as usize).min(total - 1);
        let mut site = sites[0].0;
        for &(i, h) in &sites {
            if target < h {
                site = i;
                break;
            }
            target -= h;
        }

        let a: f64 = rng.random();
        draws.push(a);
        let (action, name, attach) = if a < cfg.p_cyclic {
            let name = &cfg.cyclic_fragments[pick_index(&mut rng, cfg.cyclic_fragments.len(), &mut draws)];
            let f = fragment(name).expect("validated");
            let at = f.attach_atoms[pick_index(&mut rng, f.attach_atoms.len(), &mut draws)];
            (Action::Cyclic, name.clone(), at)
        } else if a < cfg.p_cyclic + cfg.p_functional_group {
            let name = &cfg.functional_groups[pick_index(&mut rng, cfg.functional_groups.len(), &mut draws)];
            let f = fragment(name).expect("validated");
            let at = f.attach_atoms[pick_index(&mut rng, f.attach_atoms.len(), &mut draws)];
            (Action::Fg, name.clone(), at)
        } else {
            (Action::Chain, format!("chain:{}", sample_chain_length(&mut rng, cfg, &mut draws)), 0)
        };
        let (frag, _) = resolve(&name)?;
        mol = mol.attach(site, &frag, attach)?;
        steps.push(GrowthStep { step: steps.len(), action, site: Some(site), fragment: name, attach, draws });
    }

    let smiles = to_smiles(&mol);
    Ok(Generated { mol, trace: GrowthTrace { index, smiles: smiles.clone(), steps }, smiles })
}

/// Generates molecules `0..count` in parallel; output order follows index.
pub fn generate_batch(seed: u64, count: u64, cfg: &GrowthConfig) -> Result<Vec<Generated>, MolgenError> {
    cfg.validate()?;
    (0..count).into_par_iter().map(|i| generate(seed, i, cfg)).collect()
}

/// Rebuilds a molecule from its trace without any random draws.
pub fn replay(trace: &GrowthTrace) -> Result<MolGraph, MolgenError> {
    let (first, rest) = trace.steps.split_first().ok_or_else(|| MolgenError::Replay("empty trace".into()))?;
    if first.action != Action::Seed {
        return Err(MolgenError::Replay("first step is not a seed".into()));
    }
    let mut mol = resolve(&first.fragment)?.0;
    for s in rest {
        let site = s.site.ok_or_else(|| MolgenError::Replay(format!("step {} has no site", s.step)))?;
        let (frag, allowed) = resolve(&s.fragment)?;
        if !allowed.contains(&s.attach) {
            return Err(MolgenError::Replay(format!("step {}: atom {} is not an attachment point", s.step, s.attach)));
        }
        mol = mol.attach(site, &frag, s.attach)?;
    }
    Ok(mol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::{composition, is_isomorphic, parse_smiles, BondOrder, Category};

    #[test]
    fn chain_lengths_bounded_with_expected_mean() {
        let cfg = GrowthConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut draws = Vec::new();
        let mut sum = 0usize;
        for _ in 0..100_000 {
            let n = sample_chain_length(&mut rng, &cfg, &mut draws);
            assert!((3..=12).contains(&n));
            sum += n;
            draws.clear();
        }
        let mean = sum as f64 / 1e5;
        assert!((6.8..=7.4).contains(&mean), "{mean}");

        let narrow = GrowthConfig { chain_std: 0.0, ..cfg };
        assert_eq!(sample_chain_length(&mut rng, &narrow, &mut draws), 7);
    }

    #[test]
    fn attach_examples() {
        let hexane = parse_smiles("CCCCCC").unwrap();
        let heptane = hexane.attach(0, &alkyl_chain(1), 0).unwrap();
        assert!(is_isomorphic(&heptane, &parse_smiles("CCCCCCC").unwrap()));

        let fluoro = parse_smiles("CF").unwrap();
        assert_eq!(fluoro.attach(1, &alkyl_chain(1), 0), Err(ChemError::NoHydrogenAtSite(1)));

        let ol = parse_smiles("C1CCCC1").unwrap().attach(0, &fragment("hydroxyl").unwrap().graph, 0).unwrap();
        let c = composition(&ol);
        assert_eq!((c.carbon, c.hydrogen, c.oxygen), (5, 10, 1));
        assert!((mol_weight(&ol) - 86.134).abs() < 1e-3);
    }

    #[test]
    fn config_validation() {
        assert!(GrowthConfig::fg_on().validate().is_ok());
        let c = GrowthConfig { p_cyclic: 0.7, p_functional_group: 0.4, ..Default::default() };
        assert!(matches!(c.validate(), Err(MolgenError::InvalidConfig(_))));
        let c = GrowthConfig { cyclic_fragments: vec!["adamantane".into()], ..Default::default() };
        assert_eq!(c.validate(), Err(MolgenError::UnknownFragment("adamantane".into())));
        let c = GrowthConfig { cyclic_fragments: vec![], ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn pure_alkanes_without_rings_or_groups() {
        let cfg = GrowthConfig { p_cyclic: 0.0, p_functional_group: 0.0, seed_cyclic_probability: 0.0, ..Default::default() };
        for i in 0..200 {
            let g = generate(11, i, &cfg).unwrap();
            assert!(g.mol.atoms().iter().all(|a| a.element == Element::C));
            assert!(g.mol.bonds().iter().all(|b| b.order == BondOrder::Single));
            assert_eq!(g.mol.ring_count(), 0);
        }
    }

    #[test]
    fn deterministic_and_replayable() {
        let cfg = GrowthConfig::fg_on();
        let a = generate_batch(5, 50, &cfg).unwrap();
        let b = generate_batch(5, 50, &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.smiles, y.smiles);
            assert_eq!(x.trace, y.trace);
            let back = replay(&x.trace).unwrap();
            assert_eq!(to_smiles(&back), x.smiles);
            assert!(composition(&x.mol).category.is_allowed());
            assert_ne!(composition(&x.mol).category, Category::Other);
        }
        let single = generate(5, 17, &cfg).unwrap();
        assert_eq!(single.smiles, a[17].smiles);
    }

    #[test]
    fn trace_json_round_trip() {
        let g = generate(2, 3, &GrowthConfig::fg_on()).unwrap();
        let text = serde_json::to_string(&g.trace).unwrap();
        let back: GrowthTrace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g.trace);
    }
}

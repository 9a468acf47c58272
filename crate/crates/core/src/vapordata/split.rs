use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, VaporError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Partition {
    Fold(u8),
    Holdout,
}

impl Partition {
    pub fn is_holdout(self) -> bool {
        self == Partition::Holdout
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Partition::Fold(k) => write!(f, "fold{k}"),
            Partition::Holdout => f.write_str("holdout"),
        }
    }
}

impl std::str::FromStr for Partition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "holdout" {
            return Ok(Partition::Holdout);
        }
        s.strip_prefix("fold")
            .and_then(|k| k.parse().ok())
            .map(Partition::Fold)
            .ok_or_else(|| format!("unknown partition label {s:?}"))
    }
}

/// Molecule id to partition. Every instance of a molecule follows its id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartitionMap {
    pub assignments: BTreeMap<String, Partition>,
}

impl PartitionMap {
    pub fn get(&self, molecule_id: &str) -> Option<Partition> {
        self.assignments.get(molecule_id).copied()
    }

    /// Partition label of each dataset instance, in instance order.
    pub fn labels_for(&self, dataset: &Dataset) -> Option<Vec<Partition>> {
        dataset.instances.iter().map(|i| self.get(&i.molecule_id)).collect()
    }

    pub fn members(&self, p: Partition) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &q)| q == p)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn partitions(&self) -> Vec<Partition> {
        let mut ps: Vec<Partition> = self.assignments.values().copied().collect();
        ps.sort();
        ps.dedup();
        ps
    }
}

/// Group-aware stratified split.
///
/// Molecules are ordered by their median target (ties by id) and dealt in
/// blocks of `k_folds + holdout` consecutive molecules; within each block the
/// deal order is rotated by a seeded offset. Each block therefore spreads
/// neighbors in target space across all partitions.
pub fn stratified_group_split(
    dataset: &Dataset,
    k_folds: usize,
    holdout: bool,
    seed: u64,
) -> Result<PartitionMap, VaporError> {
    let labels: Vec<Partition> = (0..k_folds)
        .map(|k| Partition::Fold(k as u8))
        .chain(holdout.then_some(Partition::Holdout))
        .collect();
    let p = labels.len();
    let medians = dataset.molecule_medians();
    if p == 0 || medians.len() < p {
        return Err(VaporError::TooFewGroups {
            groups: medians.len(),
            needed: p.max(1),
        });
    }
    let mut order: Vec<(&String, f64)> = medians.iter().map(|(k, &v)| (k, v)).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();
    for block in order.chunks(p) {
        let rotation = rng.random_range(0..p);
        for (j, (id, _)) in block.iter().enumerate() {
            assignments.insert((*id).clone(), labels[(j + rotation) % p]);
        }
    }
    // n >= p, so the first block is full and no partition is empty
    Ok(PartitionMap { assignments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vapordata::VpInstance;
    use rand::seq::SliceRandom;

    fn synthetic(n_mol: usize, per: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut instances = Vec::new();
        for m in 0..n_mol {
            let base: f64 = rng.random_range(-12.0..2.0);
            for k in 0..per {
                instances.push(VpInstance {
                    molecule_id: format!("mol{m:03}"),
                    temperature: 300.0 + 2.0 * k as f64,
                    y: base + 0.05 * k as f64,
                });
            }
        }
        Dataset { instances }
    }

    #[test]
    fn eight_molecules_two_each() {
        let ds = synthetic(8, 3, 1);
        let map = stratified_group_split(&ds, 3, true, 7).unwrap();
        for p in [Partition::Fold(0), Partition::Fold(1), Partition::Fold(2), Partition::Holdout] {
            assert_eq!(map.members(p).len(), 2);
        }
    }

    #[test]
    fn instances_follow_their_molecule() {
        let ds = synthetic(30, 20, 2);
        let map = stratified_group_split(&ds, 3, true, 3).unwrap();
        let labels = map.labels_for(&ds).unwrap();
        let mut per_mol: BTreeMap<&str, Partition> = BTreeMap::new();
        for (inst, l) in ds.instances.iter().zip(labels) {
            let prev = per_mol.insert(&inst.molecule_id, l);
            assert!(prev.is_none() || prev == Some(l));
        }
        assert_eq!(map.partitions().len(), 4);
    }

    #[test]
    fn too_few_groups() {
        let ds = synthetic(3, 2, 0);
        assert_eq!(
            stratified_group_split(&ds, 3, true, 0),
            Err(VaporError::TooFewGroups { groups: 3, needed: 4 })
        );
    }

    #[test]
    fn partition_labels_parse() {
        for p in [Partition::Fold(0), Partition::Fold(2), Partition::Holdout] {
            assert_eq!(p.to_string().parse::<Partition>().unwrap(), p);
        }
        assert!("fold".parse::<Partition>().is_err());
    }

    fn median_spread(ds: &Dataset, map: &PartitionMap) -> f64 {
        let medians = ds.molecule_medians();
        let mut per_part: BTreeMap<Partition, Vec<f64>> = BTreeMap::new();
        for (id, p) in &map.assignments {
            per_part.entry(*p).or_default().push(medians[id]);
        }
        let mom: Vec<f64> = per_part.values().map(|v| crate::vapordata::dataset::median(v)).collect();
        let hi = mom.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = mom.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    #[test]
    fn stratification_beats_random_split() {
        let ds = synthetic(100, 5, 11);
        let ids = ds.molecule_ids();
        let (mut strat, mut random) = (0.0, 0.0);
        for seed in 0..100u64 {
            let map = stratified_group_split(&ds, 3, true, seed).unwrap();
            strat += median_spread(&ds, &map);

            let mut shuffled = ids.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(1000 + seed));
            let labels = [Partition::Fold(0), Partition::Fold(1), Partition::Fold(2), Partition::Holdout];
            let assignments = shuffled
                .iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), labels[i % 4]))
                .collect();
            random += median_spread(&ds, &PartitionMap { assignments });
        }
        assert!(strat <= random, "stratified {strat} vs random {random}");
    }
}

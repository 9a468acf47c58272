use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::{antoine_vp, AntoineParams, VaporError};
use crate::chemgraph::{composition, parse_smiles, to_smiles, Category};

/// One source row: a molecule with its Antoine parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AntoineRecord {
    pub id: String,
    pub smiles: String,
    pub params: AntoineParams,
}

/// A single target value: log10 vapor pressure (Pa) of a molecule at T.
#[derive(Debug, Clone, PartialEq)]
pub struct VpInstance {
    pub molecule_id: String,
    pub temperature: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub instances: Vec<VpInstance>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Molecule ids in first-appearance order.
    pub fn molecule_ids(&self) -> Vec<String> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for inst in &self.instances {
            if seen.insert(inst.molecule_id.as_str(), ()).is_none() {
                out.push(inst.molecule_id.clone());
            }
        }
        out
    }

    /// Median target per molecule.
    pub fn molecule_medians(&self) -> BTreeMap<String, f64> {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for inst in &self.instances {
            groups.entry(inst.molecule_id.clone()).or_default().push(inst.y);
        }
        groups.into_iter().map(|(k, v)| (k, median(&v))).collect()
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    Parse(String),
    ElementSet,
    MinCarbon,
    /// Same canonical structure as an earlier kept record.
    Duplicate(String),
}

impl RejectReason {
    pub fn label(&self) -> &'static str {
        match self {
            RejectReason::Parse(_) => "parse",
            RejectReason::ElementSet => "element set",
            RejectReason::MinCarbon => "min-carbon",
            RejectReason::Duplicate(_) => "duplicate",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterReport {
    pub kept: Vec<AntoineRecord>,
    pub rejected: Vec<(String, RejectReason)>,
    pub category_counts: BTreeMap<Category, usize>,
}

pub const MIN_CARBON: usize = 6;

/// Keeps records in the allowed element categories with at least six
/// carbons, dropping later duplicates of the same canonical structure.
/// Parse failures are reported per record and do not abort the batch.
pub fn composition_filter(records: &[AntoineRecord]) -> FilterReport {
    let mut report = FilterReport::default();
    let mut seen: HashMap<String, String> = HashMap::new();
    for rec in records {
        let mol = match parse_smiles(&rec.smiles) {
            Ok(m) => m,
            Err(crate::chemgraph::ChemError::UnsupportedElement { .. }) => {
                report.rejected.push((rec.id.clone(), RejectReason::ElementSet));
                continue;
            }
            Err(e) => {
                report.rejected.push((rec.id.clone(), RejectReason::Parse(e.to_string())));
                continue;
            }
        };
        let comp = composition(&mol);
        if !comp.category.is_allowed() {
            report.rejected.push((rec.id.clone(), RejectReason::ElementSet));
            continue;
        }
        if comp.carbon < MIN_CARBON {
            report.rejected.push((rec.id.clone(), RejectReason::MinCarbon));
            continue;
        }
        let key = to_smiles(&mol);
        if let Some(first) = seen.get(&key) {
            report.rejected.push((rec.id.clone(), RejectReason::Duplicate(first.clone())));
            continue;
        }
        seen.insert(key, rec.id.clone());
        *report.category_counts.entry(comp.category).or_default() += 1;
        report.kept.push(rec.clone());
    }
    report
}

pub const DEFAULT_SAMPLES: usize = 20;
pub const MIN_SEPARATION_K: f64 = 2.0;

/// `n` evenly spaced temperatures on `[t_min, t_max]` including both ends.
/// When that spacing would fall below `min_sep`, the count drops to
/// `floor((t_max - t_min) / min_sep) + 1`.
pub fn sample_temperatures(t_min: f64, t_max: f64, n: usize, min_sep: f64) -> Result<Vec<f64>, VaporError> {
    let range = t_max - t_min;
    if !(range >= min_sep) || n < 2 {
        return Err(VaporError::DegenerateRange { t_min, t_max });
    }
    let mut count = n;
    if range / ((n - 1) as f64) < min_sep {
        count = ((range / min_sep).floor() as usize + 1).max(2);
    }
    let step = range / (count - 1) as f64;
    let mut out: Vec<f64> = (0..count).map(|i| t_min + step * i as f64).collect();
    out[count - 1] = t_max;
    Ok(out)
}

/// Variable-temperature dataset: each record evaluated on its sampled
/// temperature grid. Failing records are returned separately.
pub fn build_variable_dataset(records: &[AntoineRecord]) -> (Dataset, Vec<(String, VaporError)>) {
    build_variable_dataset_with(records, DEFAULT_SAMPLES, MIN_SEPARATION_K)
}

/// [`build_variable_dataset`] with an explicit grid size and spacing floor.
pub fn build_variable_dataset_with(
    records: &[AntoineRecord],
    samples: usize,
    min_sep: f64,
) -> (Dataset, Vec<(String, VaporError)>) {
    let per_record: Vec<Result<Vec<VpInstance>, VaporError>> = records
        .par_iter()
        .map(|rec| {
            rec.params.validate()?;
            let temps = sample_temperatures(rec.params.t_min, rec.params.t_max, samples, min_sep)?;
            temps
                .into_iter()
                .map(|t| {
                    Ok(VpInstance {
                        molecule_id: rec.id.clone(),
                        temperature: t,
                        y: antoine_vp(&rec.params, t)?.log10_pa,
                    })
                })
                .collect()
        })
        .collect();
    let mut dataset = Dataset::default();
    let mut errors = Vec::new();
    for (rec, res) in records.iter().zip(per_record) {
        match res {
            Ok(rows) => dataset.instances.extend(rows),
            Err(e) => errors.push((rec.id.clone(), e)),
        }
    }
    (dataset, errors)
}

pub const FIXED_TEMPERATURE_K: f64 = 387.0;

/// Fixed-temperature dataset: one instance per record whose validated range
/// contains `t`. Returns the dataset and the ids that were skipped.
pub fn build_fixed_dataset(records: &[AntoineRecord], t: f64) -> (Dataset, Vec<String>) {
    let mut dataset = Dataset::default();
    let mut skipped = Vec::new();
    for rec in records {
        if !rec.params.contains(t) {
            skipped.push(rec.id.clone());
            continue;
        }
        match antoine_vp(&rec.params, t) {
            Ok(v) => dataset.instances.push(VpInstance {
                molecule_id: rec.id.clone(),
                temperature: t,
                y: v.log10_pa,
            }),
            Err(_) => skipped.push(rec.id.clone()),
        }
    }
    (dataset, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, smiles: &str, t_min: f64, t_max: f64) -> AntoineRecord {
        AntoineRecord {
            id: id.into(),
            smiles: smiles.into(),
            params: AntoineParams::new(4.0, 1200.0, -50.0, t_min, t_max).unwrap(),
        }
    }

    #[test]
    fn temperature_grids() {
        let t = sample_temperatures(300.0, 400.0, 20, 2.0).unwrap();
        assert_eq!(t.len(), 20);
        assert!((t[1] - t[0] - 100.0 / 19.0).abs() < 1e-12);
        assert_eq!(*t.last().unwrap(), 400.0);

        let t = sample_temperatures(300.0, 320.0, 20, 2.0).unwrap();
        assert_eq!(t.len(), 11);
        for w in t.windows(2) {
            assert!((w[1] - w[0] - 2.0).abs() < 1e-12);
        }
        assert_eq!(
            sample_temperatures(300.0, 301.0, 20, 2.0),
            Err(VaporError::DegenerateRange { t_min: 300.0, t_max: 301.0 })
        );
    }

    #[test]
    fn grid_spacing_never_below_minimum() {
        for tenth in 20..600 {
            let range = tenth as f64 / 10.0;
            let t = sample_temperatures(250.0, 250.0 + range, 20, 2.0).unwrap();
            assert!(t.len() >= 2);
            for w in t.windows(2) {
                assert!(w[1] - w[0] >= 2.0 - 1e-9, "range {range}");
            }
        }
    }

    #[test]
    fn filter_reasons() {
        let records = vec![
            record("hexane", "CCCCCC", 300.0, 340.0),
            record("pentane", "CCCCC", 300.0, 340.0),
            record("chloromethane", "CCl", 300.0, 340.0),
            record("water", "O", 300.0, 340.0),
            record("hexane-again", "C(CCCC)C", 300.0, 340.0),
            record("broken", "C1CC", 300.0, 340.0),
            record("ester", "CCCCCC(=O)OC", 300.0, 340.0),
        ];
        let report = composition_filter(&records);
        let kept: Vec<_> = report.kept.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(kept, ["hexane", "ester"]);
        let reason = |id: &str| report.rejected.iter().find(|r| r.0 == id).unwrap().1.label();
        assert_eq!(reason("pentane"), "min-carbon");
        assert_eq!(reason("chloromethane"), "element set");
        assert_eq!(reason("water"), "element set");
        assert_eq!(reason("hexane-again"), "duplicate");
        assert_eq!(reason("broken"), "parse");
        assert_eq!(report.category_counts[&Category::HC], 1);
        assert_eq!(report.category_counts[&Category::HCO], 1);
    }

    #[test]
    fn variable_dataset_counts() {
        let records = vec![
            record("a", "CCCCCC", 300.0, 400.0),
            record("b", "CCCCCCC", 300.0, 320.0),
        ];
        let (ds, errors) = build_variable_dataset(&records);
        assert!(errors.is_empty());
        assert_eq!(ds.len(), 31);
        assert_eq!(ds.instances.iter().filter(|i| i.molecule_id == "a").count(), 20);
        assert_eq!(ds.instances.iter().filter(|i| i.molecule_id == "b").count(), 11);
    }

    #[test]
    fn full_corpus_instance_count() {
        let records: Vec<_> = (0..462)
            .map(|i| record(&format!("m{i}"), "CCCCCC", 280.0, 380.0 + (i % 7) as f64))
            .collect();
        let (ds, _) = build_variable_dataset(&records);
        assert_eq!(ds.len(), 9240);
    }

    #[test]
    fn fixed_dataset_membership() {
        let records = vec![
            record("in", "CCCCCC", 350.0, 400.0),
            record("out", "CCCCCCC", 390.0, 450.0),
        ];
        let (ds, skipped) = build_fixed_dataset(&records, FIXED_TEMPERATURE_K);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.instances[0].molecule_id, "in");
        assert_eq!(skipped, ["out"]);
    }
}

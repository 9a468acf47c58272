use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{ChemspaceError, DistanceMatrix};
use crate::chemgraph::{similarity, Fingerprint, SimilarityMetric};
use crate::stats::{median, std_dev};

pub const NOISE: i32 = -1;

/// DBSCAN over a distance matrix. A point's neighborhood includes itself;
/// a point is core when its neighborhood holds at least `min_pts` points.
/// Clusters are numbered in order of their lowest-index core point.
pub fn dbscan(d: &DistanceMatrix, eps: f64, min_pts: usize) -> Result<Vec<i32>, ChemspaceError> {
    if !(eps > 0.0) || min_pts == 0 {
        return Err(ChemspaceError::InvalidParameter(format!("eps {eps}, min_pts {min_pts}")));
    }
    let n = d.n;
    let neighbors = |i: usize| -> Vec<usize> { (0..n).filter(|&j| d.get(i, j) <= eps).collect() };
    let mut labels = vec![NOISE; n];
    let mut visited = vec![false; n];
    let mut next = 0;
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let nb = neighbors(i);
        if nb.len() < min_pts {
            continue;
        }
        labels[i] = next;
        let mut queue: VecDeque<usize> = nb.into_iter().collect();
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = next;
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let nbj = neighbors(j);
            if nbj.len() >= min_pts {
                queue.extend(nbj);
            }
        }
        next += 1;
    }
    Ok(labels)
}

/// DBSCAN on 2-D coordinates with Euclidean distance.
pub fn dbscan_points(points: &[[f64; 2]], eps: f64, min_pts: usize) -> Result<Vec<i32>, ChemspaceError> {
    dbscan(&DistanceMatrix::from_points(points), eps, min_pts)
}

/// The `quantile` (linear interpolation) of each point's distance to its
/// k-th nearest other point.
pub fn default_eps(d: &DistanceMatrix, k: usize, quantile: f64) -> Result<f64, ChemspaceError> {
    if d.n <= k || k == 0 {
        return Err(ChemspaceError::InvalidParameter(format!("{} points too few for k = {k}", d.n)));
    }
    let mut kth: Vec<f64> = (0..d.n)
        .map(|i| {
            let mut row: Vec<f64> = (0..d.n).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
            row.sort_by(f64::total_cmp);
            row[k - 1]
        })
        .collect();
    kth.sort_by(f64::total_cmp);
    let pos = quantile.clamp(0.0, 1.0) * (kth.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    Ok(kth[lo] + (kth[hi] - kth[lo]) * (pos - lo as f64))
}

/// Renames cluster labels to first-appearance order; noise stays −1.
pub fn normalize_labels(labels: &[i32]) -> Vec<i32> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            if l == NOISE {
                NOISE
            } else {
                let k = map.len() as i32;
                *map.entry(l).or_insert(k)
            }
        })
        .collect()
}

/// Index of the member with the highest mean similarity to the others
/// (self excluded); ties go to the lowest index.
pub fn medoid_by(n: usize, sim: impl Fn(usize, usize) -> f64) -> Result<usize, ChemspaceError> {
    if n == 0 {
        return Err(ChemspaceError::Empty);
    }
    if n == 1 {
        return Ok(0);
    }
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..n {
        let mean = (0..n).filter(|&j| j != i).map(|j| sim(i, j)).sum::<f64>() / (n - 1) as f64;
        if mean > best.1 {
            best = (i, mean);
        }
    }
    Ok(best.0)
}

pub fn cluster_medoid(members: &[&Fingerprint], metric: SimilarityMetric) -> Result<usize, ChemspaceError> {
    if let Some(f) = members.iter().find(|f| f.nbits() != members[0].nbits()) {
        return Err(crate::chemgraph::ChemError::WidthMismatch(members[0].nbits(), f.nbits()).into());
    }
    medoid_by(members.len(), |i, j| similarity(members[i], members[j], metric).expect("widths checked"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub label: i32,
    pub size: usize,
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Size, median and spread of `values` per non-noise cluster, by label.
pub fn cluster_stats(labels: &[i32], values: &[f64]) -> Result<Vec<ClusterStats>, ChemspaceError> {
    if labels.len() != values.len() {
        return Err(ChemspaceError::LengthMismatch { left: labels.len(), right: values.len() });
    }
    let mut groups: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (&l, &v) in labels.iter().zip(values) {
        if l != NOISE {
            groups.entry(l).or_default().push(v);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(label, v)| ClusterStats { label, size: v.len(), median: median(&v), std: std_dev(&v) })
        .collect())
}

//! Fingerprint distances, t-SNE embedding, DBSCAN clustering and cluster
//! summaries.

mod cluster;
mod tsne;

use rayon::prelude::*;
use thiserror::Error;

use crate::chemgraph::{similarity, ChemError, Fingerprint, SimilarityMetric};

pub use cluster::{
    cluster_medoid, cluster_stats, dbscan, dbscan_points, default_eps, medoid_by, normalize_labels, ClusterStats, NOISE,
};
pub use tsne::{joint_probabilities, tsne, TsneConfig, TsneResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChemspaceError {
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error("perplexity {perplexity} too large for {n} points (need n > 3·perplexity)")]
    PerplexityTooLarge { perplexity: f64, n: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no points")]
    Empty,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Symmetric n×n distances with a zero diagonal, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub n: usize,
    pub data: Vec<f64>,
    pub metric: String,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Euclidean distances between 2-D points.
    pub fn from_points(points: &[[f64; 2]]) -> DistanceMatrix {
        let n = points.len();
        let data = (0..n * n)
            .map(|k| {
                let (a, b) = (points[k / n], points[k % n]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .collect();
        DistanceMatrix { n, data, metric: "euclidean".into() }
    }
}

/// 1 − similarity for every fingerprint pair; rows computed in parallel.
pub fn distance_matrix(fps: &[Fingerprint], metric: SimilarityMetric) -> Result<DistanceMatrix, ChemspaceError> {
    let n = fps.len();
    if let Some(f) = fps.iter().find(|f| f.nbits() != fps[0].nbits()) {
        return Err(ChemError::WidthMismatch(fps[0].nbits(), f.nbits()).into());
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Ok(0.0) } else { similarity(&fps[i], &fps[j], metric).map(|s| 1.0 - s) })
                .collect::<Result<Vec<f64>, ChemError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut data = rows.concat();
    // evaluate each pair once so the matrix is exactly symmetric
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    Ok(DistanceMatrix { n, data, metric: metric.name().to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::{morgan_fingerprint, parse_smiles};

    fn fps(smiles: &[&str]) -> Vec<Fingerprint> {
        smiles.iter().map(|s| morgan_fingerprint(&parse_smiles(s).unwrap(), 2, 1024).unwrap()).collect()
    }

    #[test]
    fn identical_set_is_zero() {
        let d = distance_matrix(&fps(&["CCCCCC"; 4]), SimilarityMetric::RogersTanimoto).unwrap();
        assert!(d.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn symmetric_bounded_and_matches_pairwise() {
        let f = fps(&["CCCCCC", "CCCCCCO", "c1ccccc1", "C1CCCCC1", "CC(C)CCCC", "CCCCCCCCCC(=O)O"]);
        let d = distance_matrix(&f, SimilarityMetric::RogersTanimoto).unwrap();
        for i in 0..f.len() {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..f.len() {
                assert_eq!(d.get(i, j), d.get(j, i));
                assert!((0.0..=1.0).contains(&d.get(i, j)));
            }
        }
        let hand = 1.0 - f[0].rogers_tanimoto(&f[2]).unwrap();
        assert_eq!(d.get(0, 2), hand);
    }

    #[test]
    fn width_mismatch() {
        let a = morgan_fingerprint(&parse_smiles("CCC").unwrap(), 2, 64).unwrap();
        let b = morgan_fingerprint(&parse_smiles("CCC").unwrap(), 2, 128).unwrap();
        assert!(matches!(
            distance_matrix(&[a, b], SimilarityMetric::Tanimoto),
            Err(ChemspaceError::Chem(ChemError::WidthMismatch(64, 128)))
        ));
    }
}

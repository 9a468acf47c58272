use super::{FeatselError, FeatureMatrix};

/// Removes columns whose values are all bit-identical.
pub fn drop_constant(x: &FeatureMatrix) -> Result<(FeatureMatrix, Vec<String>), FeatselError> {
    if x.nrows() == 0 {
        return Err(FeatselError::Empty);
    }
    let mut keep = Vec::new();
    let mut removed = Vec::new();
    for (j, col) in x.data.column_iter().enumerate() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            removed.push(x.names[j].clone());
        } else {
            keep.push(j);
        }
    }
    if keep.is_empty() {
        return Err(FeatselError::AllConstant);
    }
    Ok((x.select_columns(&keep), removed))
}

/// A column dropped by [`correlation_filter`] and the earlier column it
/// duplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedPair {
    pub kept: String,
    pub dropped: String,
    pub r2: f64,
}

/// Squared Pearson correlation of two equal-length columns.
pub fn pearson_r2(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab * sab) / (saa * sbb)
}

/// Greedy redundancy filter in column order: a column is dropped when its
/// R² with any previously kept column exceeds `r2_threshold`. The report
/// names the first kept column that triggered the drop.
pub fn correlation_filter(x: &FeatureMatrix, r2_threshold: f64) -> (FeatureMatrix, Vec<DroppedPair>) {
    let cols: Vec<Vec<f64>> = x.data.column_iter().map(|c| c.iter().copied().collect()).collect();
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..cols.len() {
        let hit = kept
            .iter()
            .map(|&i| (i, pearson_r2(&cols[i], &cols[j])))
            .find(|&(_, r2)| r2 > r2_threshold);
        match hit {
            Some((i, r2)) => dropped.push(DroppedPair {
                kept: x.names[i].clone(),
                dropped: x.names[j].clone(),
                r2,
            }),
            None => kept.push(j),
        }
    }
    (x.select_columns(&kept), dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn fm(names: &[&str], cols: &[Vec<f64>]) -> FeatureMatrix {
        let n = cols[0].len();
        let data = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        FeatureMatrix::new(names.iter().map(|s| s.to_string()).collect(), data).unwrap()
    }

    #[test]
    fn constant_columns() {
        let x = fm(
            &["ones", "ramp", "near"],
            &[vec![1.0; 4], vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 1.0, 1.0, 1.0 + f64::EPSILON]],
        );
        let (kept, removed) = drop_constant(&x).unwrap();
        assert_eq!(removed, ["ones"]);
        assert_eq!(kept.names, ["ramp", "near"]);

        let all = fm(&["a", "b"], &[vec![2.0; 3], vec![0.0; 3]]);
        assert_eq!(drop_constant(&all).unwrap_err(), FeatselError::AllConstant);
    }

    #[test]
    fn duplicate_and_negated_columns() {
        let x = vec![0.3, 1.2, -0.4, 2.2, 0.9];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let other = vec![1.0, -1.0, 1.0, 1.0, -1.0];
        let m = fm(&["x", "dup", "neg", "other"], &[x.clone(), x.clone(), neg, other]);
        let (kept, dropped) = correlation_filter(&m, 0.5);
        assert_eq!(kept.names, ["x", "other"]);
        assert_eq!(dropped.len(), 2);
        assert_eq!(dropped[0].kept, "x");
        assert_eq!(dropped[1].dropped, "neg");
        assert!((dropped[1].r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_normals_survive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        // R² of independent n=1000 samples concentrates near 1/n
        assert!(pearson_r2(&a, &b) < 0.05);
        let (kept, _) = correlation_filter(&fm(&["a", "b"], &[a, b]), 0.5);
        assert_eq!(kept.ncols(), 2);
    }

    #[test]
    fn order_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cols: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..50).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let mut cols2 = cols.clone();
        cols2[5] = cols[2].iter().map(|v| v * 3.0 + 1.0).collect();
        let names = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let m = fm(&names, &cols2);
        let first = correlation_filter(&m, 0.5).0;
        let second = correlation_filter(&m, 0.5).0;
        assert_eq!(first, second);
        assert!(!first.names.contains(&"f".to_string()));
    }
}

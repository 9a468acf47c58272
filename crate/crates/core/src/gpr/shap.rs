use nalgebra::DMatrix;

use super::{GprError, GprModel};

pub const MAX_EXACT_FEATURES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub base: f64,
    pub values: Vec<f64>,
}

/// Exact interventional Shapley values of a batch predictor.
///
/// The value of a coalition S is the mean prediction over background rows
/// with the features in S replaced by those of `x`. All 2^d coalitions are
/// evaluated in a single batch call.
pub fn shapley_values<F>(predict: F, x: &[f64], background: &DMatrix<f64>) -> Result<Attribution, GprError>
where
    F: Fn(&DMatrix<f64>) -> Result<Vec<f64>, GprError>,
{
    let d = x.len();
    if d > MAX_EXACT_FEATURES {
        return Err(GprError::TooManyFeatures(d));
    }
    if background.nrows() == 0 {
        return Err(GprError::EmptyBackground);
    }
    if background.ncols() != d {
        return Err(GprError::DimensionMismatch { expected: d, got: background.ncols() });
    }
    let b = background.nrows();
    let coalitions = 1usize << d;
    let rows = DMatrix::from_fn(coalitions * b, d, |r, k| {
        let (mask, i) = (r / b, r % b);
        if mask & (1 << k) != 0 {
            x[k]
        } else {
            background[(i, k)]
        }
    });
    let preds = predict(&rows)?;
    let value: Vec<f64> = (0..coalitions)
        .map(|s| preds[s * b..(s + 1) * b].iter().sum::<f64>() / b as f64)
        .collect();

    // weight(|S|) = |S|!(d-|S|-1)!/d!
    let mut fact = vec![1.0f64; d + 1];
    for i in 1..=d {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut values = vec![0.0; d];
    for (j, phi) in values.iter_mut().enumerate() {
        let bit = 1 << j;
        for s in 0..coalitions {
            if s & bit != 0 {
                continue;
            }
            let size = (s as u32).count_ones() as usize;
            let w = fact[size] * fact[d - size - 1] / fact[d];
            *phi += w * (value[s | bit] - value[s]);
        }
    }
    Ok(Attribution { base: value[0], values })
}

impl GprModel {
    pub fn shapley(&self, x: &[f64], background: &DMatrix<f64>) -> Result<Attribution, GprError> {
        shapley_values(|rows| self.predict_mean(rows), x, background)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpr::{BasisKind, KernelFamily, KernelParams, KernelSpec, TrainOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn additive_function_recovers_terms() {
        // f = 2a - b with zero-mean background → φ = (2(a - ā), -(b - b̄))
        let bg = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, -1.0]);
        let f = |m: &DMatrix<f64>| Ok((0..m.nrows()).map(|i| 2.0 * m[(i, 0)] - m[(i, 1)]).collect());
        let a = shapley_values(f, &[3.0, 4.0], &bg).unwrap();
        assert!((a.values[0] - 4.0).abs() < 1e-12);
        assert!((a.values[1] + 4.0).abs() < 1e-12);
        assert!((a.base - 2.0).abs() < 1e-12);
    }

    #[test]
    fn efficiency_on_trained_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(25, 3, |_, _| rng.random::<f64>());
        let y: Vec<f64> = (0..25).map(|i| x[(i, 0)] * x[(i, 1)] + x[(i, 2)].sin()).collect();
        let spec = KernelSpec::new(KernelFamily::Matern52, true);
        let m = GprModel::train(&x, &y, spec, BasisKind::Linear, &TrainOptions::default()).unwrap();
        let bg = x.rows(0, 10).into_owned();
        let q = [0.3, 0.8, 0.1];
        let a = m.shapley(&q, &bg).unwrap();
        let pred = m.predict_mean(&DMatrix::from_row_slice(1, 3, &q)).unwrap()[0];
        assert!((a.base + a.values.iter().sum::<f64>() - pred).abs() < 1e-8);
    }

    #[test]
    fn ignored_feature_gets_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(15, 2, |_, _| rng.random::<f64>());
        let y: Vec<f64> = (0..15).map(|i| x[(i, 0)].powi(2)).collect();
        let spec = KernelSpec::new(KernelFamily::SquaredExponential, true);
        let params = KernelParams { signal_var: 1.0, length: vec![0.5, 1e6], alpha: 1.0 };
        let m = GprModel::with_params(&x, &y, spec, BasisKind::Constant, params, 1e-4, false).unwrap();
        let a = m.shapley(&[0.9, 0.1], &x.rows(0, 8).into_owned()).unwrap();
        assert!(a.values[1].abs() < 1e-6);
    }

    #[test]
    fn limits() {
        let f = |m: &DMatrix<f64>| Ok(vec![0.0; m.nrows()]);
        assert_eq!(shapley_values(f, &[0.0; 11], &DMatrix::zeros(1, 11)), Err(GprError::TooManyFeatures(11)));
        assert_eq!(shapley_values(f, &[0.0; 2], &DMatrix::zeros(0, 2)), Err(GprError::EmptyBackground));
    }
}

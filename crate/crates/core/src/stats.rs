//! Small statistics helpers shared by the modeling modules.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    variance(v).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    crate::vapordata::dataset::median(v)
}

/// Per-column location and scale estimated on a training split.
///
/// Columns with zero spread get scale 1 so they standardize to zero rather
/// than to NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ColumnScaler {
    pub fn fit(x: &DMatrix<f64>) -> ColumnScaler {
        let (mut mean, mut scale) = (Vec::with_capacity(x.ncols()), Vec::with_capacity(x.ncols()));
        for col in x.column_iter() {
            let v: Vec<f64> = col.iter().copied().collect();
            let s = std_dev(&v);
            mean.push(self::mean(&v));
            scale.push(if s > 0.0 && s.is_finite() { s } else { 1.0 });
        }
        ColumnScaler { mean, scale }
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.mean[j]) / self.scale[j])
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

/// Location and scale of a target vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mean: f64,
    pub scale: f64,
}

impl TargetScaler {
    pub fn fit(y: &[f64]) -> TargetScaler {
        let s = std_dev(y);
        TargetScaler {
            mean: mean(y),
            scale: if s > 0.0 && s.is_finite() { s } else { 1.0 },
        }
    }

    pub fn forward(&self, y: f64) -> f64 {
        (y - self.mean) / self.scale
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.scale + self.mean
    }
}

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{FeatselError, FeatureMatrix};
use crate::stats::ColumnScaler;

pub const CD_TOLERANCE: f64 = 1e-7;
pub const MAX_SWEEPS: usize = 10_000;
pub const GRID_POINTS: usize = 100;
pub const GRID_RATIO: f64 = 1e-4;

/// Coefficients along a λ grid plus, when produced by cross-validation, the
/// per-λ CV error curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    /// `coefs[k]` holds the coefficient vector at `lambdas[k]`.
    pub coefs: Vec<Vec<f64>>,
    pub sweeps: Vec<usize>,
    pub cv_mean: Vec<f64>,
    pub cv_se: Vec<f64>,
}

impl LassoPath {
    pub fn active_count(&self, k: usize) -> usize {
        self.coefs[k].iter().filter(|&&b| b != 0.0).count()
    }
}

/// (1/2n)·‖y − Xβ‖² + λ‖β‖₁
pub fn lasso_objective(x: &DMatrix<f64>, y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = x.nrows();
    let mut rss = 0.0;
    for i in 0..n {
        let pred: f64 = (0..x.ncols()).map(|j| x[(i, j)] * beta[j]).sum();
        rss += (y[i] - pred).powi(2);
    }
    rss / (2.0 * n as f64) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Smallest λ at which every coefficient is zero: max_j |x_jᵀy| / n.
pub fn lambda_max(x: &DMatrix<f64>, y: &[f64]) -> f64 {
    let rows = x.nrows();
    if rows == 0 {
        return 0.0;
    }
    x.as_slice()
        .chunks(rows)
        .map(|c| crate::gpr::dot(c, y).abs() / rows as f64)
        .fold(0.0, f64::max)
}

/// `points` log-spaced values from λ_max down to λ_max·ratio.
pub fn lambda_grid(x: &DMatrix<f64>, y: &[f64], points: usize, ratio: f64) -> Vec<f64> {
    let top = lambda_max(x, y);
    if points == 1 {
        return vec![top];
    }
    let (hi, lo) = (top.ln(), (top * ratio).ln());
    (0..points)
        .map(|k| (hi + (lo - hi) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// One cyclic coordinate-descent sweep. `resid` must equal y − Xβ on entry
/// and is kept in sync. Returns the largest absolute coefficient change.
pub fn cd_sweep(x: &DMatrix<f64>, col_sq: &[f64], resid: &mut [f64], beta: &mut [f64], lambda: f64) -> f64 {
    let rows = x.nrows();
    let n = rows as f64;
    let data = x.as_slice();
    let mut max_change: f64 = 0.0;
    for j in 0..x.ncols() {
        let a = col_sq[j];
        if a == 0.0 {
            beta[j] = 0.0;
            continue;
        }
        let col = &data[j * rows..(j + 1) * rows];
        let rho = crate::gpr::dot(col, resid) / n + a * beta[j];
        let new = soft_threshold(rho, lambda) / a;
        let delta = new - beta[j];
        if delta != 0.0 {
            for (r, c) in resid.iter_mut().zip(col.iter()) {
                *r -= c * delta;
            }
            beta[j] = new;
            max_change = max_change.max(delta.abs());
        }
    }
    max_change
}

/// Coordinate-descent LASSO path with warm starts along `lambdas` (taken in
/// the order given). `x` should be standardized and `y` centered.
pub fn lasso_path(x: &DMatrix<f64>, y: &[f64], lambdas: &[f64]) -> Result<LassoPath, FeatselError> {
    if x.nrows() != y.len() {
        return Err(FeatselError::Shape(format!("{} rows vs {} targets", x.nrows(), y.len())));
    }
    let n = x.nrows() as f64;
    let p = x.ncols();
    let col_sq: Vec<f64> = x.column_iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / n).collect();
    let mut beta = vec![0.0; p];
    let mut resid = y.to_vec();
    let mut coefs = Vec::with_capacity(lambdas.len());
    let mut sweeps = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mut done = None;
        for sweep in 1..=MAX_SWEEPS {
            #[cfg(debug_assertions)]
            let before = lasso_objective(x, y, &beta, lambda);
            let change = cd_sweep(x, &col_sq, &mut resid, &mut beta, lambda);
            #[cfg(debug_assertions)]
            {
                let after = lasso_objective(x, y, &beta, lambda);
                debug_assert!(after <= before + 1e-10 * before.abs().max(1.0), "objective rose");
            }
            if change < CD_TOLERANCE {
                done = Some(sweep);
                break;
            }
        }
        let sweep = done.ok_or(FeatselError::NonConvergence { lambda })?;
        coefs.push(beta.clone());
        sweeps.push(sweep);
    }
    Ok(LassoPath {
        lambdas: lambdas.to_vec(),
        coefs,
        sweeps,
        cv_mean: Vec::new(),
        cv_se: Vec::new(),
    })
}

/// One-standard-error rule: the largest λ whose mean CV error is within one
/// standard error (of the minimizing λ) of the minimum. Returns indices
/// (argmin, selected).
pub fn one_se_rule(lambdas: &[f64], mean: &[f64], se: &[f64]) -> (usize, usize) {
    let argmin = (0..mean.len())
        .min_by(|&a, &b| mean[a].total_cmp(&mean[b]).then(a.cmp(&b)))
        .expect("non-empty curve");
    let band = mean[argmin] + se[argmin];
    let selected = (0..mean.len())
        .filter(|&k| mean[k] <= band)
        .max_by(|&a, &b| lambdas[a].total_cmp(&lambdas[b]).then(b.cmp(&a)))
        .unwrap_or(argmin);
    (argmin, selected)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoCv {
    pub path: LassoPath,
    pub argmin: usize,
    pub selected: usize,
    pub lambda: f64,
    /// Coefficients of the all-data refit at the selected λ, in standardized
    /// units.
    pub coefs: Vec<f64>,
    pub active: Vec<String>,
}

/// Random k-fold CV over the λ grid, then the 1SE rule and an all-data
/// refit. Standardization statistics come from each training fold.
pub fn lasso_cv_1se(x: &FeatureMatrix, y: &[f64], folds: usize, seed: u64) -> Result<LassoCv, FeatselError> {
    let n = x.nrows();
    if y.len() != n {
        return Err(FeatselError::Shape(format!("{n} rows vs {} targets", y.len())));
    }
    if folds < 2 || n < folds {
        return Err(FeatselError::TooFewRows { rows: n, folds });
    }
    let (xs, yc) = standardize(&x.data, y);
    let grid = lambda_grid(&xs, &yc, GRID_POINTS, GRID_RATIO);
    if grid[0] == 0.0 {
        return Err(FeatselError::Shape("target has no linear signal (λ_max = 0)".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }

    let fold_mse: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
            let valid: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
            let x_train = x.data.select_rows(&train);
            let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let scaler = ColumnScaler::fit(&x_train);
            let y_mean = crate::stats::mean(&y_train);
            let xt = scaler.transform(&x_train);
            let yt: Vec<f64> = y_train.iter().map(|v| v - y_mean).collect();
            let path = lasso_path(&xt, &yt, &grid)?;
            let xv = scaler.transform(&x.data.select_rows(&valid));
            Ok(path
                .coefs
                .iter()
                .map(|beta| {
                    let mut sse = 0.0;
                    for (r, &i) in valid.iter().enumerate() {
                        let pred = y_mean + (0..beta.len()).map(|j| xv[(r, j)] * beta[j]).sum::<f64>();
                        sse += (y[i] - pred).powi(2);
                    }
                    sse / valid.len() as f64
                })
                .collect())
        })
        .collect::<Result<_, FeatselError>>()?;

    let k = grid.len();
    let mut cv_mean = vec![0.0; k];
    let mut cv_se = vec![0.0; k];
    for l in 0..k {
        let vals: Vec<f64> = fold_mse.iter().map(|m| m[l]).collect();
        let m = crate::stats::mean(&vals);
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (folds - 1) as f64;
        cv_mean[l] = m;
        cv_se[l] = var.sqrt() / (folds as f64).sqrt();
    }
    let (argmin, selected) = one_se_rule(&grid, &cv_mean, &cv_se);

    let refit = lasso_path(&xs, &yc, &grid[..=selected])?;
    let coefs = refit.coefs[selected].clone();
    let active = coefs
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(j, _)| x.names[j].clone())
        .collect();
    let mut path = refit;
    path.cv_mean = cv_mean;
    path.cv_se = cv_se;
    Ok(LassoCv {
        lambda: grid[selected],
        path: LassoPath { lambdas: grid, ..path },
        argmin,
        selected,
        coefs,
        active,
    })
}

fn standardize(x: &DMatrix<f64>, y: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let scaler = ColumnScaler::fit(x);
    let m = crate::stats::mean(y);
    (scaler.transform(x), y.iter().map(|v| v - m).collect())
}

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::basis::BasisKind;
use super::linalg::{dot, Chol};
use super::kernel::{cross_kernel, gram, rows_of, scaled_distance, KernelParams, KernelSpec};
use super::optim::{minimize_box, OptimOptions, StopReason};
use super::GprError;
use crate::hashing::Fnv;
use crate::stats::{ColumnScaler, TargetScaler};

pub const JITTER_LADDER: [f64; 7] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];
pub const MIN_NOISE_VAR: f64 = 1e-8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    /// Total optimizer starts: the default initialization plus
    /// `starts - 1` seeded random perturbations of it.
    pub starts: usize,
    pub seed: u64,
    pub optim: OptimOptions,
    /// Standardize inputs and target with training statistics.
    pub standardize: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            starts: 3,
            seed: 0,
            optim: OptimOptions::default(),
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub std: f64,
}

/// Log-marginal-likelihood objective over log-hyperparameters for one
/// training set. Parameter layout: `[log σf, log ℓ.., (log α), log σn]`.
#[derive(Debug, Clone)]
pub struct LmlProblem {
    spec: KernelSpec,
    basis: BasisKind,
    x: Vec<f64>,
    n: usize,
    d: usize,
    y: DVector<f64>,
    h: DMatrix<f64>,
    x_scaler: ColumnScaler,
    y_scaler: TargetScaler,
}

struct Factor {
    chol: Chol,
    jitter: f64,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    lml: f64,
}

impl LmlProblem {
    pub fn new(x: &DMatrix<f64>, y: &[f64], spec: KernelSpec, basis: BasisKind, standardize: bool) -> Result<LmlProblem, GprError> {
        if x.nrows() != y.len() {
            return Err(GprError::LengthMismatch { left: x.nrows(), right: y.len() });
        }
        if x.nrows() < 1 {
            return Err(GprError::TooFewPoints(x.nrows()));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(GprError::NonFinite);
        }
        let (x_scaler, y_scaler) = if standardize {
            (ColumnScaler::fit(x), TargetScaler::fit(y))
        } else {
            (
                ColumnScaler { mean: vec![0.0; x.ncols()], scale: vec![1.0; x.ncols()] },
                TargetScaler { mean: 0.0, scale: 1.0 },
            )
        };
        let xs = x_scaler.transform(x);
        let ys: Vec<f64> = y.iter().map(|&v| y_scaler.forward(v)).collect();
        Ok(Self::from_standardized(rows_of(&xs), x.nrows(), x.ncols(), ys, spec, basis, x_scaler, y_scaler))
    }

    #[allow(clippy::too_many_arguments)]
    fn from_standardized(
        x: Vec<f64>,
        n: usize,
        d: usize,
        y: Vec<f64>,
        spec: KernelSpec,
        basis: BasisKind,
        x_scaler: ColumnScaler,
        y_scaler: TargetScaler,
    ) -> LmlProblem {
        let h = basis.design(&x, n, d);
        LmlProblem {
            spec,
            basis,
            x,
            n,
            d,
            y: DVector::from_vec(y),
            h,
            x_scaler,
            y_scaler,
        }
    }

    pub fn dim(&self) -> usize {
        1 + self.spec.length_count(self.d) + self.spec.has_alpha() as usize + 1
    }

    pub fn unpack(&self, theta: &[f64]) -> (KernelParams, f64) {
        let m = self.spec.length_count(self.d);
        let params = KernelParams {
            signal_var: (2.0 * theta[0]).exp(),
            length: theta[1..1 + m].iter().map(|v| v.exp()).collect(),
            alpha: if self.spec.has_alpha() { theta[1 + m].exp() } else { 1.0 },
        };
        (params, (2.0 * theta[theta.len() - 1]).exp())
    }

    pub fn pack(&self, params: &KernelParams, noise_var: f64) -> Vec<f64> {
        let mut t = vec![0.5 * params.signal_var.ln()];
        t.extend(params.length.iter().map(|l| l.ln()));
        if self.spec.has_alpha() {
            t.push(params.alpha.ln());
        }
        t.push(0.5 * noise_var.ln());
        t
    }

    /// Box bounds in log space.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.spec.length_count(self.d);
        let mut lo = vec![0.5 * 1e-6f64.ln()];
        let mut hi = vec![0.5 * 1e4f64.ln()];
        lo.extend(std::iter::repeat_n(1e-3f64.ln(), m));
        hi.extend(std::iter::repeat_n(1e4f64.ln(), m));
        if self.spec.has_alpha() {
            lo.push(1e-3f64.ln());
            hi.push(1e4f64.ln());
        }
        lo.push(0.5 * MIN_NOISE_VAR.ln());
        hi.push(0.5 * 10f64.ln());
        (lo, hi)
    }

    /// Default start: σf² = 1, σn² = 0.1 (standardized units), length
    /// scales from the median pairwise distance.
    pub fn initial(&self) -> Vec<f64> {
        let (n, d) = (self.n, self.d);
        let step = n.div_ceil(300).max(1);
        let idx: Vec<usize> = (0..n).step_by(step).collect();
        let median_of = |f: &dyn Fn(usize, usize) -> f64| {
            let mut v = Vec::new();
            for (a, &i) in idx.iter().enumerate() {
                for &j in &idx[..a] {
                    v.push(f(i, j));
                }
            }
            let m = crate::stats::median(&v);
            if m.is_finite() && m > 1e-6 {
                m
            } else {
                1.0
            }
        };
        let x = &self.x;
        let length: Vec<f64> = if self.spec.ard {
            (0..d).map(|k| median_of(&|i, j| (x[i * d + k] - x[j * d + k]).abs())).collect()
        } else {
            let unit = KernelParams::isotropic(1.0, 1.0);
            vec![median_of(&|i, j| scaled_distance(&unit, &x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]))]
        };
        let params = KernelParams { signal_var: 1.0, length, alpha: 1.0 };
        let (lo, hi) = self.bounds();
        let mut t = self.pack(&params, 0.1);
        for i in 0..t.len() {
            t[i] = t[i].clamp(lo[i], hi[i]);
        }
        t
    }

    fn factor(&self, params: &KernelParams, noise_var: f64) -> Result<Factor, GprError> {
        let n = self.n;
        let base = gram(&self.spec, params, &self.x, n, self.d);
        let mut found = None;
        for j in std::iter::once(0.0).chain(JITTER_LADDER) {
            let mut k = base.clone();
            for i in 0..n {
                k[i * n + i] += noise_var + j;
            }
            if let Some(c) = Chol::new(k, n) {
                found = Some((c, j));
                break;
            }
        }
        let (chol, jitter) = found.ok_or(GprError::SingularKernel)?;
        let y: Vec<f64> = self.y.iter().copied().collect();
        let p = self.h.ncols();
        let mut r = y.clone();
        let beta = if p == 0 {
            Vec::new()
        } else {
            let kih: Vec<Vec<f64>> = (0..p).map(|c| chol.solve(self.h.column(c).as_slice())).collect();
            let a = DMatrix::from_fn(p, p, |i, j| dot(self.h.column(i).as_slice(), &kih[j]));
            let b = DVector::from_fn(p, |i, _| dot(&kih[i], &y));
            let sol = a.svd(true, true).solve(&b, 1e-12).map_err(|_| GprError::SingularKernel)?;
            let beta: Vec<f64> = sol.iter().copied().collect();
            for i in 0..n {
                r[i] -= (0..p).map(|c| self.h[(i, c)] * beta[c]).sum::<f64>();
            }
            beta
        };
        let alpha = chol.solve(&r);
        let lml = -0.5 * dot(&r, &alpha) - 0.5 * chol.log_det() - 0.5 * n as f64 * LN_2PI;
        if !lml.is_finite() {
            return Err(GprError::SingularKernel);
        }
        Ok(Factor { chol, jitter, beta, alpha, lml })
    }

    fn gradient(&self, params: &KernelParams, noise_var: f64, f: &Factor) -> Vec<f64> {
        let (n, d) = (self.n, self.d);
        let kinv = f.chol.inverse();
        let a = &f.alpha;
        let m = self.spec.length_count(d);
        let mut g = vec![0.0; self.dim()];
        let sf2 = params.signal_var;
        let fam = self.spec.family;
        let al = params.alpha;
        let inv_len: Vec<f64> = (0..d).map(|k| 1.0 / params.length[if m == 1 { 0 } else { k }]).collect();
        let mut trace_w = 0.0;
        let mut s2 = vec![0.0; d];
        for i in 0..n {
            let wii = a[i] * a[i] - kinv[i * n + i];
            trace_w += wii;
            g[0] += wii * sf2;
            let xi = &self.x[i * d..(i + 1) * d];
            for j in 0..i {
                let w = a[i] * a[j] - kinv[i * n + j];
                let xj = &self.x[j * d..(j + 1) * d];
                let mut r2 = 0.0;
                for k in 0..d {
                    let s = (xi[k] - xj[k]) * inv_len[k];
                    s2[k] = s * s;
                    r2 += s2[k];
                }
                let r = r2.sqrt();
                let kv = sf2 * fam.profile(r, al);
                // off-diagonal pairs appear twice in the trace, cancelling the ½
                g[0] += 2.0 * w * kv;
                let hs = w * sf2 * fam.slope(r, al);
                if m == 1 {
                    g[1] += hs * r2;
                } else {
                    for k in 0..d {
                        g[1 + k] += hs * s2[k];
                    }
                }
                if self.spec.has_alpha() {
                    let u = 1.0 + r2 / (2.0 * al);
                    g[1 + m] += w * kv * (-al * u.ln() + r2 / (2.0 * u));
                }
            }
        }
        let last = g.len() - 1;
        g[last] = noise_var * trace_w;
        g
    }

    /// Log marginal likelihood and its gradient at `theta`.
    pub fn eval(&self, theta: &[f64]) -> Result<(f64, Vec<f64>), GprError> {
        let (params, noise) = self.unpack(theta);
        let f = self.factor(&params, noise)?;
        let g = self.gradient(&params, noise, &f);
        Ok((f.lml, g))
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64, GprError> {
        let (params, noise) = self.unpack(theta);
        Ok(self.factor(&params, noise)?.lml)
    }

    fn into_model(self, params: KernelParams, noise_var: f64, fit: FitSummary) -> Result<GprModel, GprError> {
        let f = self.factor(&params, noise_var)?;
        Ok(GprModel {
            chol: f.chol,
            alpha: f.alpha,
            beta: f.beta,
            jitter: f.jitter,
            lml: f.lml,
            params,
            noise_var,
            fit,
            problem: self,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    /// Final log marginal likelihood of each start; `None` when a start
    /// failed outright.
    pub start_lml: Vec<Option<f64>>,
    pub best_start: usize,
    pub iterations: usize,
    pub stop: Option<StopReason>,
}

/// Trained Gaussian-process regressor with explicit basis.
#[derive(Debug, Clone)]
pub struct GprModel {
    problem: LmlProblem,
    params: KernelParams,
    noise_var: f64,
    beta: Vec<f64>,
    chol: Chol,
    alpha: Vec<f64>,
    jitter: f64,
    lml: f64,
    fit: FitSummary,
}

impl GprModel {
    /// Fits hyperparameters by maximizing the log marginal likelihood.
    pub fn train(x: &DMatrix<f64>, y: &[f64], spec: KernelSpec, basis: BasisKind, opts: &TrainOptions) -> Result<GprModel, GprError> {
        if x.nrows() < 2 {
            return Err(GprError::TooFewPoints(x.nrows()));
        }
        let problem = LmlProblem::new(x, y, spec, basis, opts.standardize)?;
        let (lo, hi) = problem.bounds();
        let init = problem.initial();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut best: Option<(f64, Vec<f64>, usize, StopReason)> = None;
        let mut start_lml = Vec::new();
        let mut best_start = 0;
        for s in 0..opts.starts.max(1) {
            let mut x0 = init.clone();
            if s > 0 {
                for (i, v) in x0.iter_mut().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = (*v + z).clamp(lo[i], hi[i]);
                }
            }
            let res = minimize_box(
                |t| problem.eval(t).ok().map(|(v, g)| (-v, g.into_iter().map(|x| -x).collect())),
                |t| problem.value(t).ok().map(|v| -v),
                &x0,
                &lo,
                &hi,
                &opts.optim,
            );
            match res {
                Some(r) => {
                    let lml = -r.f;
                    start_lml.push(Some(lml));
                    if best.as_ref().is_none_or(|b| lml > b.0) {
                        best = Some((lml, r.x, r.iterations, r.stop));
                        best_start = s;
                    }
                }
                None => start_lml.push(None),
            }
        }
        let (_, theta, iterations, stop) = best.ok_or(GprError::SingularKernel)?;
        let (params, noise) = problem.unpack(&theta);
        let fit = FitSummary { start_lml, best_start, iterations, stop: Some(stop) };
        problem.into_model(params, noise, fit)
    }

    /// Builds a model at fixed hyperparameters (no optimization). With
    /// `standardize` off, hyperparameters and β are in raw units.
    pub fn with_params(
        x: &DMatrix<f64>,
        y: &[f64],
        spec: KernelSpec,
        basis: BasisKind,
        params: KernelParams,
        noise_var: f64,
        standardize: bool,
    ) -> Result<GprModel, GprError> {
        params.validate(&spec, x.ncols())?;
        if !(noise_var >= 0.0) {
            return Err(GprError::InvalidHyperparameters);
        }
        let problem = LmlProblem::new(x, y, spec, basis, standardize)?;
        let fit = FitSummary { start_lml: Vec::new(), best_start: 0, iterations: 0, stop: None };
        problem.into_model(params, noise_var, fit)
    }

    pub fn kernel(&self) -> KernelSpec {
        self.problem.spec
    }

    pub fn basis(&self) -> BasisKind {
        self.problem.basis
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn n_features(&self) -> usize {
        self.problem.d
    }

    pub fn n_train(&self) -> usize {
        self.problem.n
    }

    pub fn fit_summary(&self) -> &FitSummary {
        &self.fit
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    /// Current hyperparameters in the optimizer's log layout.
    pub fn log_params(&self) -> Vec<f64> {
        self.problem.pack(&self.params, self.noise_var)
    }

    pub fn problem(&self) -> &LmlProblem {
        &self.problem
    }

    fn prepare(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, GprError> {
        if x.ncols() != self.problem.d {
            return Err(GprError::DimensionMismatch { expected: self.problem.d, got: x.ncols() });
        }
        Ok(rows_of(&self.problem.x_scaler.transform(x)))
    }

    fn latent_mean(&self, xs: &[f64], kstar: &DMatrix<f64>, i: usize) -> f64 {
        let d = self.problem.d;
        let krow: Vec<f64> = kstar.row(i).iter().copied().collect();
        let mut m = dot(&krow, &self.alpha);
        if !self.beta.is_empty() {
            let h = self.problem.basis.row(&xs[i * d..(i + 1) * d]);
            m += dot(&h, &self.beta);
        }
        m
    }

    /// Posterior mean and standard deviation (latent function, excluding
    /// observation noise) in target units.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<Prediction>, GprError> {
        let xs = self.prepare(x)?;
        let p = &self.problem;
        let kstar = cross_kernel(&p.spec, &self.params, &xs, &p.x, p.d);
        let ys = p.y_scaler;
        Ok((0..x.nrows())
            .map(|i| {
                let m = self.latent_mean(&xs, &kstar, i);
                let krow: Vec<f64> = kstar.row(i).iter().copied().collect();
                let v = self.chol.solve_lower(&krow);
                let var = (self.params.signal_var - dot(&v, &v)).max(0.0);
                Prediction { mean: ys.inverse(m), std: var.sqrt() * ys.scale }
            })
            .collect())
    }

    /// Posterior mean only, in target units.
    pub fn predict_mean(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, GprError> {
        let xs = self.prepare(x)?;
        let p = &self.problem;
        let kstar = cross_kernel(&p.spec, &self.params, &xs, &p.x, p.d);
        Ok((0..x.nrows()).map(|i| p.y_scaler.inverse(self.latent_mean(&xs, &kstar, i))).collect())
    }

    /// FNV-1a over the standardized training inputs and targets.
    pub fn data_hash(&self) -> String {
        let mut h = Fnv::new();
        h.write_u64(self.problem.n as u64);
        h.write_u64(self.problem.d as u64);
        for v in self.problem.x.iter().chain(self.problem.y.iter()) {
            h.write_f64(*v);
        }
        format!("{:016x}", h.finish())
    }

    pub fn to_record(&self) -> ModelRecord {
        let p = &self.problem;
        ModelRecord {
            kernel: p.spec.to_string(),
            basis: p.basis.to_string(),
            signal_var: self.params.signal_var,
            length: self.params.length.clone(),
            alpha: p.spec.has_alpha().then_some(self.params.alpha),
            noise_var: self.noise_var,
            beta: self.beta.clone(),
            x_scaler: p.x_scaler.clone(),
            y_scaler: p.y_scaler,
            n: p.n,
            d: p.d,
            x_train: p.x.clone(),
            y_train: p.y.iter().copied().collect(),
            data_hash: self.data_hash(),
            log_marginal_likelihood: self.lml,
        }
    }

    pub fn from_record(rec: &ModelRecord) -> Result<GprModel, GprError> {
        let spec: KernelSpec = rec.kernel.parse()?;
        let basis: BasisKind = rec.basis.parse()?;
        if rec.x_train.len() != rec.n * rec.d || rec.y_train.len() != rec.n {
            return Err(GprError::Record("training data shape".into()));
        }
        let params = KernelParams {
            signal_var: rec.signal_var,
            length: rec.length.clone(),
            alpha: rec.alpha.unwrap_or(1.0),
        };
        params.validate(&spec, rec.d)?;
        let problem = LmlProblem::from_standardized(
            rec.x_train.clone(),
            rec.n,
            rec.d,
            rec.y_train.clone(),
            spec,
            basis,
            rec.x_scaler.clone(),
            rec.y_scaler,
        );
        let fit = FitSummary { start_lml: Vec::new(), best_start: 0, iterations: 0, stop: None };
        let model = problem.into_model(params, rec.noise_var, fit)?;
        if model.data_hash() != rec.data_hash {
            return Err(GprError::Record("training data hash mismatch".into()));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("model record serializes")
    }

    pub fn from_json(text: &str) -> Result<GprModel, GprError> {
        let rec: ModelRecord = serde_json::from_str(text).map_err(|e| GprError::Record(e.to_string()))?;
        GprModel::from_record(&rec)
    }
}

/// Self-describing persisted form of a [`GprModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub kernel: String,
    pub basis: String,
    pub signal_var: f64,
    pub length: Vec<f64>,
    pub alpha: Option<f64>,
    pub noise_var: f64,
    pub beta: Vec<f64>,
    pub x_scaler: ColumnScaler,
    pub y_scaler: TargetScaler,
    pub n: usize,
    pub d: usize,
    /// Standardized training inputs, row-major.
    pub x_train: Vec<f64>,
    pub y_train: Vec<f64>,
    pub data_hash: String,
    pub log_marginal_likelihood: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpr::kernel::{kernel_eval, KernelFamily};
    use rand::Rng;

    fn params_for(spec: &KernelSpec, d: usize) -> KernelParams {
        KernelParams {
            signal_var: 1.3,
            length: (0..spec.length_count(d)).map(|k| 0.8 + 0.3 * k as f64).collect(),
            alpha: 1.7,
        }
    }

    /// Closed-form posterior for two training points and zero mean.
    fn two_point_oracle(spec: &KernelSpec, p: &KernelParams, noise: f64, x: [[f64; 2]; 2], y: [f64; 2], q: [f64; 2]) -> (f64, f64) {
        let k = |a: &[f64], b: &[f64]| kernel_eval(spec, p, a, b).unwrap();
        let (a, b, c) = (k(&x[0], &x[0]) + noise, k(&x[0], &x[1]), k(&x[1], &x[1]) + noise);
        let det = a * c - b * b;
        let inv = [[c / det, -b / det], [-b / det, a / det]];
        let ks = [k(&q, &x[0]), k(&q, &x[1])];
        let w = [inv[0][0] * y[0] + inv[0][1] * y[1], inv[1][0] * y[0] + inv[1][1] * y[1]];
        let mean = ks[0] * w[0] + ks[1] * w[1];
        let quad = ks[0] * (inv[0][0] * ks[0] + inv[0][1] * ks[1]) + ks[1] * (inv[1][0] * ks[0] + inv[1][1] * ks[1]);
        (mean, (k(&q, &q) - quad).sqrt())
    }

    #[test]
    fn two_point_posterior_matches_closed_form() {
        let x = [[0.1, -0.4], [0.9, 0.3]];
        let y = [1.5, -0.7];
        let xm = DMatrix::from_row_slice(2, 2, &[x[0][0], x[0][1], x[1][0], x[1][1]]);
        for spec in KernelSpec::all() {
            let p = params_for(&spec, 2);
            let model = GprModel::with_params(&xm, &y, spec, BasisKind::None, p.clone(), 0.05, false).unwrap();
            for q in [[0.5, 0.0], [-1.0, 2.0], [0.1, -0.4]] {
                let (m, s) = two_point_oracle(&spec, &p, 0.05, x, y, q);
                let pred = model.predict(&DMatrix::from_row_slice(1, 2, &q)).unwrap()[0];
                assert!((pred.mean - m).abs() < 1e-8, "{spec}");
                assert!((pred.std - s).abs() < 1e-8, "{spec}");
            }
        }
    }

    #[test]
    fn single_point_lml() {
        let x = DMatrix::from_row_slice(1, 1, &[0.0]);
        let spec = KernelSpec::new(KernelFamily::SquaredExponential, false);
        let m = GprModel::with_params(&x, &[0.0], spec, BasisKind::None, KernelParams::isotropic(0.5, 1.0), 0.5, false).unwrap();
        assert!((m.log_marginal_likelihood() + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        assert!((m.log_marginal_likelihood() + 0.9189).abs() < 1e-4);
    }

    #[test]
    fn lml_invariant_to_row_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(12, 2, |_, _| rng.random::<f64>());
        let y: Vec<f64> = (0..12).map(|i| x[(i, 0)] - x[(i, 1)]).collect();
        let spec = KernelSpec::new(KernelFamily::Matern32, true);
        let p = params_for(&spec, 2);
        let a = GprModel::with_params(&x, &y, spec, BasisKind::Linear, p.clone(), 0.01, true).unwrap();
        let order: Vec<usize> = (0..12).rev().collect();
        let yr: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let b = GprModel::with_params(&x.select_rows(&order), &yr, spec, BasisKind::Linear, p, 0.01, true).unwrap();
        assert!((a.log_marginal_likelihood() - b.log_marginal_likelihood()).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(15, 2, |_, _| rng.random::<f64>() * 2.0);
        let y: Vec<f64> = (0..15).map(|i| (3.0 * x[(i, 0)]).sin() + x[(i, 1)] + 0.05 * rng.random::<f64>()).collect();
        for spec in KernelSpec::all() {
            for basis in [BasisKind::None, BasisKind::Linear] {
                let prob = LmlProblem::new(&x, &y, spec, basis, true).unwrap();
                let theta: Vec<f64> = prob.initial().iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
                let (_, g) = prob.eval(&theta).unwrap();
                for i in 0..theta.len() {
                    let h = 1e-5;
                    let mut tp = theta.clone();
                    let mut tm = theta.clone();
                    tp[i] += h;
                    tm[i] -= h;
                    let fd = (prob.value(&tp).unwrap() - prob.value(&tm).unwrap()) / (2.0 * h);
                    let rel = (g[i] - fd).abs() / fd.abs().max(1e-3);
                    assert!(rel < 1e-4, "{spec} {basis} param {i}: {} vs {fd}", g[i]);
                }
            }
        }
    }

    #[test]
    fn interpolates_training_points() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let y = [0.5, -0.2, 0.9, 0.1];
        let spec = KernelSpec::new(KernelFamily::SquaredExponential, false);
        let m = GprModel::with_params(&x, &y, spec, BasisKind::Constant, KernelParams::isotropic(1.0, 1.0), 1e-8, false).unwrap();
        for (p, t) in m.predict(&x).unwrap().iter().zip(y) {
            assert!((p.mean - t).abs() < 1e-3);
            assert!(p.std < 1e-3);
        }
    }

    #[test]
    fn far_query_reverts_to_prior() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 0.5, 1.0]);
        let y = [2.0, 2.4, 1.9];
        let spec = KernelSpec::new(KernelFamily::Matern52, false);
        let m = GprModel::with_params(&x, &y, spec, BasisKind::Constant, KernelParams::isotropic(0.7, 0.5), 0.01, false).unwrap();
        let p = m.predict(&DMatrix::from_row_slice(1, 1, &[1.0 + 20.0 * 0.5])).unwrap()[0];
        assert!((p.mean - m.beta()[0]).abs() < 1e-3);
        assert!((p.std * p.std - 0.7).abs() < 1e-3 * 0.7);
    }

    #[test]
    fn linear_target_with_linear_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(30, 2, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let y: Vec<f64> = (0..30).map(|i| 1.5 * x[(i, 0)] - 0.5 * x[(i, 1)] + 3.0).collect();
        let spec = KernelSpec::new(KernelFamily::SquaredExponential, false);
        let m = GprModel::train(&x, &y, spec, BasisKind::Linear, &TrainOptions::default()).unwrap();
        assert!(m.noise_var() <= 1e-6, "noise {}", m.noise_var());
        for (p, t) in m.predict_mean(&x).unwrap().iter().zip(&y) {
            assert!((p - t).abs() < 1e-4);
        }
    }

    #[test]
    fn conflicting_duplicates_train() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 0.0, 1.0, 1.0]);
        let y = [1.0, 2.0, 0.0, -1.0];
        let spec = KernelSpec::new(KernelFamily::Matern32, false);
        let m = GprModel::train(&x, &y, spec, BasisKind::Constant, &TrainOptions::default()).unwrap();
        assert!(m.noise_var() > 1e-3);
    }

    #[test]
    fn noise_optimum_is_local_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DMatrix::from_fn(25, 1, |_, _| rng.random::<f64>() * 5.0);
        let y: Vec<f64> = (0..25).map(|i| x[(i, 0)].sin() + 0.2 * (rng.random::<f64>() - 0.5)).collect();
        let spec = KernelSpec::new(KernelFamily::Matern52, false);
        let m = GprModel::train(&x, &y, spec, BasisKind::Constant, &TrainOptions::default()).unwrap();
        let theta = m.log_params();
        let best = m.problem().value(&theta).unwrap();
        for delta in [-0.3, 0.3] {
            let mut t = theta.clone();
            *t.last_mut().unwrap() += delta;
            assert!(m.problem().value(&t).unwrap() < best);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(20, 2, |_, _| rng.random::<f64>());
        let y: Vec<f64> = (0..20).map(|i| x[(i, 0)] * x[(i, 1)]).collect();
        let spec = KernelSpec::new(KernelFamily::RationalQuadratic, true);
        let opts = TrainOptions { seed: 9, ..Default::default() };
        let a = GprModel::train(&x, &y, spec, BasisKind::Constant, &opts).unwrap();
        let b = GprModel::train(&x, &y, spec, BasisKind::Constant, &opts).unwrap();
        assert_eq!(a.log_params(), b.log_params());
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = DMatrix::from_fn(10, 2, |_, _| rng.random::<f64>());
        let y: Vec<f64> = (0..10).map(|i| x[(i, 0)] + 2.0 * x[(i, 1)]).collect();
        let spec = KernelSpec::new(KernelFamily::Matern52, true);
        let m = GprModel::train(&x, &y, spec, BasisKind::PureQuadratic, &TrainOptions::default()).unwrap();
        let back = GprModel::from_json(&m.to_json()).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[0.2, 0.3, 0.9, -0.1]);
        assert_eq!(m.predict(&q).unwrap(), back.predict(&q).unwrap());

        let mut rec = m.to_record();
        rec.y_train[0] += 1.0;
        assert!(matches!(GprModel::from_record(&rec), Err(GprError::Record(_))));
    }

    #[test]
    fn predict_dimension_mismatch() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let spec = KernelSpec::new(KernelFamily::Matern52, false);
        let m = GprModel::with_params(&x, &[0.0, 1.0], spec, BasisKind::None, KernelParams::isotropic(1.0, 1.0), 0.1, true).unwrap();
        assert!(matches!(
            m.predict(&DMatrix::zeros(1, 2)),
            Err(GprError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }
}

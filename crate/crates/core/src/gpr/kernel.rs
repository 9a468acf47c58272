use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GprError;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KernelFamily {
    Exponential,
    SquaredExponential,
    Matern32,
    Matern52,
    RationalQuadratic,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::Exponential,
        KernelFamily::SquaredExponential,
        KernelFamily::Matern32,
        KernelFamily::Matern52,
        KernelFamily::RationalQuadratic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Exponential => "exponential",
            KernelFamily::SquaredExponential => "squaredexponential",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
            KernelFamily::RationalQuadratic => "rationalquadratic",
        }
    }

    /// Correlation as a function of scaled distance r (α only for RQ).
    pub fn profile(self, r: f64, alpha: f64) -> f64 {
        match self {
            KernelFamily::Exponential => (-r).exp(),
            KernelFamily::SquaredExponential => (-0.5 * r * r).exp(),
            KernelFamily::Matern32 => (1.0 + SQRT3 * r) * (-SQRT3 * r).exp(),
            KernelFamily::Matern52 => (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * (-SQRT5 * r).exp(),
            KernelFamily::RationalQuadratic => (1.0 + r * r / (2.0 * alpha)).powf(-alpha),
        }
    }

    /// −g'(r)/r, so that ∂k/∂log ℓ_i = σf²·h(r)·s_i² with s_i the scaled
    /// per-dimension offset. Zero at r = 0 for the exponential family, where
    /// every s_i also vanishes.
    pub fn slope(self, r: f64, alpha: f64) -> f64 {
        match self {
            KernelFamily::Exponential => {
                if r > 0.0 {
                    (-r).exp() / r
                } else {
                    0.0
                }
            }
            KernelFamily::SquaredExponential => (-0.5 * r * r).exp(),
            KernelFamily::Matern32 => 3.0 * (-SQRT3 * r).exp(),
            KernelFamily::Matern52 => 5.0 / 3.0 * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp(),
            KernelFamily::RationalQuadratic => (1.0 + r * r / (2.0 * alpha)).powf(-alpha - 1.0),
        }
    }
}

/// Kernel family plus isotropic/ARD length-scale structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub ard: bool,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, ard: bool) -> KernelSpec {
        KernelSpec { family, ard }
    }

    /// The ten kernels: five isotropic then five ARD.
    pub fn all() -> Vec<KernelSpec> {
        [false, true]
            .iter()
            .flat_map(|&ard| KernelFamily::ALL.iter().map(move |&f| KernelSpec::new(f, ard)))
            .collect()
    }

    pub fn length_count(&self, dim: usize) -> usize {
        if self.ard {
            dim
        } else {
            1
        }
    }

    pub fn has_alpha(&self) -> bool {
        self.family == KernelFamily::RationalQuadratic
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ard {
            f.write_str("ard")?;
        }
        f.write_str(self.family.name())
    }
}

impl FromStr for KernelSpec {
    type Err = GprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (ard, rest) = match s.strip_prefix("ard") {
            Some(r) => (true, r),
            None => (false, s),
        };
        KernelFamily::ALL
            .iter()
            .find(|f| f.name() == rest)
            .map(|&f| KernelSpec::new(f, ard))
            .ok_or_else(|| GprError::UnknownName(s.to_string()))
    }
}

/// Kernel hyperparameters in natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub signal_var: f64,
    /// One entry (isotropic) or one per input dimension (ARD).
    pub length: Vec<f64>,
    /// Shape parameter, used only by the rational quadratic family.
    pub alpha: f64,
}

impl KernelParams {
    pub fn isotropic(signal_var: f64, length: f64) -> KernelParams {
        KernelParams {
            signal_var,
            length: vec![length],
            alpha: 1.0,
        }
    }

    pub fn validate(&self, spec: &KernelSpec, dim: usize) -> Result<(), GprError> {
        if self.length.len() != spec.length_count(dim) {
            return Err(GprError::DimensionMismatch {
                expected: spec.length_count(dim),
                got: self.length.len(),
            });
        }
        let ok = self.signal_var > 0.0
            && self.length.iter().all(|&l| l > 0.0 && l.is_finite())
            && (!spec.has_alpha() || self.alpha > 0.0);
        if ok && self.signal_var.is_finite() {
            Ok(())
        } else {
            Err(GprError::InvalidHyperparameters)
        }
    }

    #[inline]
    fn inv_len(&self, k: usize) -> f64 {
        1.0 / if self.length.len() == 1 { self.length[0] } else { self.length[k] }
    }
}

/// Scaled distance between two rows.
#[inline]
pub(crate) fn scaled_distance(params: &KernelParams, a: &[f64], b: &[f64]) -> f64 {
    let mut r2 = 0.0;
    for k in 0..a.len() {
        let s = (a[k] - b[k]) * params.inv_len(k);
        r2 += s * s;
    }
    r2.sqrt()
}

pub fn kernel_eval(spec: &KernelSpec, params: &KernelParams, x: &[f64], xp: &[f64]) -> Result<f64, GprError> {
    if x.len() != xp.len() {
        return Err(GprError::DimensionMismatch {
            expected: x.len(),
            got: xp.len(),
        });
    }
    params.validate(spec, x.len())?;
    let r = scaled_distance(params, x, xp);
    Ok(params.signal_var * spec.family.profile(r, params.alpha))
}

/// Row-major copy of a matrix, convenient for tight loops over rows.
pub(crate) fn rows_of(x: &DMatrix<f64>) -> Vec<f64> {
    let (n, d) = x.shape();
    let mut out = Vec::with_capacity(n * d);
    for i in 0..n {
        for k in 0..d {
            out.push(x[(i, k)]);
        }
    }
    out
}

/// Cross-covariance between the rows of `a` (m×d) and `b` (n×d), both given
/// row-major.
pub(crate) fn cross_kernel(
    spec: &KernelSpec,
    params: &KernelParams,
    a: &[f64],
    b: &[f64],
    d: usize,
) -> DMatrix<f64> {
    let m = if d == 0 { 0 } else { a.len() / d };
    let n = if d == 0 { 0 } else { b.len() / d };
    DMatrix::from_fn(m, n, |i, j| {
        let r = scaled_distance(params, &a[i * d..(i + 1) * d], &b[j * d..(j + 1) * d]);
        params.signal_var * spec.family.profile(r, params.alpha)
    })
}

/// Symmetric Gram matrix of `x` (row-major, n×d), returned row-major.
pub(crate) fn gram(spec: &KernelSpec, params: &KernelParams, x: &[f64], n: usize, d: usize) -> Vec<f64> {
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = params.signal_var;
        let xi = &x[i * d..(i + 1) * d];
        for j in 0..i {
            let r = scaled_distance(params, xi, &x[j * d..(j + 1) * d]);
            let v = params.signal_var * spec.family.profile(r, params.alpha);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

pub fn kernel_matrix(spec: &KernelSpec, params: &KernelParams, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    // symmetric, so row-major and column-major layouts coincide
    DMatrix::from_vec(n, n, gram(spec, params, &rows_of(x), n, x.ncols()))
}

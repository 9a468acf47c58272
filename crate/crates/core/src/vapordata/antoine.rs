use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use super::VaporError;

/// Antoine coefficients in the NIST convention,
/// `log10(P / bar) = A - B / (T / K + C)`, valid on `[t_min, t_max]` K.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntoineParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t_min: f64,
    pub t_max: f64,
}

/// log10(Pa) - log10(bar)
pub const BAR_TO_PA_LOG10: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VpEval {
    /// log10 of vapor pressure in Pa.
    pub log10_pa: f64,
    /// Set when T lies outside the validated range.
    pub extrapolated: bool,
}

impl AntoineParams {
    pub fn new(a: f64, b: f64, c: f64, t_min: f64, t_max: f64) -> Result<AntoineParams, VaporError> {
        let p = AntoineParams { a, b, c, t_min, t_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), VaporError> {
        let finite = [self.a, self.b, self.c, self.t_min, self.t_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(VaporError::InvalidParams("non-finite coefficient".into()));
        }
        if self.t_min >= self.t_max {
            return Err(VaporError::InvalidParams(format!(
                "t_min {} must be below t_max {}",
                self.t_min, self.t_max
            )));
        }
        // T + C is increasing in T, so checking the lower end covers the range
        if self.t_min + self.c <= 0.0 {
            return Err(VaporError::InvalidParams(format!(
                "T + C must stay positive on the range (t_min + C = {})",
                self.t_min + self.c
            )));
        }
        Ok(())
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }
}

/// Evaluates log10 vapor pressure in Pa at temperature `t` (K).
pub fn antoine_vp(p: &AntoineParams, t: f64) -> Result<VpEval, VaporError> {
    let denom = t + p.c;
    if denom.abs() < 1e-9 {
        return Err(VaporError::SingularTemperature { t, c: p.c });
    }
    Ok(VpEval {
        log10_pa: p.a - p.b / denom + BAR_TO_PA_LOG10,
        extrapolated: !p.contains(t),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntoineFit {
    pub params: AntoineParams,
    /// Sum of squared residuals in log10 units over the fitted points.
    pub sse: f64,
    pub iterations: usize,
    pub seed_c: f64,
}

const C_SEEDS: [f64; 5] = [-150.0, -100.0, -50.0, 0.0, 50.0];
const SSE_TOL: f64 = 1e-10;
const MAX_ITER: usize = 500;

/// Least-squares Antoine fit to `(T [K], log10 P [Pa])` points.
///
/// For each C seed the linear (A, B) problem is solved exactly, then
/// Gauss-Newton with step halving refines (A, B, C). The lowest-SSE fit
/// among seeds that converged is returned.
pub fn fit_antoine(points: &[(f64, f64)], exclude: &BTreeSet<usize>) -> Result<AntoineFit, VaporError> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| !exclude.contains(i))
        .map(|(_, &(t, y))| (t, y - BAR_TO_PA_LOG10))
        .collect();
    if pts.len() < 3 {
        return Err(VaporError::InsufficientPoints(pts.len()));
    }
    if pts.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
        return Err(VaporError::InvalidParams("non-finite data point".into()));
    }
    let mut temps: Vec<f64> = pts.iter().map(|p| p.0).collect();
    temps.sort_by(f64::total_cmp);
    if temps.windows(2).any(|w| w[0] == w[1]) {
        return Err(VaporError::InvalidParams("temperatures must be distinct".into()));
    }
    let (t_lo, t_hi) = (temps[0], temps[temps.len() - 1]);

    let mut best: Option<AntoineFit> = None;
    for &seed in &C_SEEDS {
        if t_lo + seed <= 1.0 {
            continue;
        }
        let Some((a, b, c, sse, iterations)) = refine_from_seed(&pts, seed) else {
            continue;
        };
        if best.as_ref().is_none_or(|f| sse < f.sse) {
            best = Some(AntoineFit {
                params: AntoineParams {
                    a,
                    b,
                    c,
                    t_min: t_lo,
                    t_max: t_hi,
                },
                sse,
                iterations,
                seed_c: seed,
            });
        }
    }
    best.ok_or(VaporError::NonConvergence)
}

fn sse_of(pts: &[(f64, f64)], a: f64, b: f64, c: f64) -> f64 {
    pts.iter().map(|&(t, y)| (y - (a - b / (t + c))).powi(2)).sum()
}

fn linear_ab(pts: &[(f64, f64)], c: f64) -> Option<(f64, f64)> {
    let n = pts.len();
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { -1.0 / (pts[i].0 + c) });
    let rhs = DVector::from_iterator(n, pts.iter().map(|p| p.1));
    let sol = design.svd(true, true).solve(&rhs, 1e-14).ok()?;
    Some((sol[0], sol[1]))
}

fn refine_from_seed(pts: &[(f64, f64)], seed: f64) -> Option<(f64, f64, f64, f64, usize)> {
    let (mut a, mut b) = linear_ab(pts, seed)?;
    let mut c = seed;
    let t_lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut sse = sse_of(pts, a, b, c);
    let n = pts.len();
    for iter in 1..=MAX_ITER {
        let jac = DMatrix::from_fn(n, 3, |i, j| {
            let d = pts[i].0 + c;
            match j {
                0 => 1.0,
                1 => -1.0 / d,
                _ => b / (d * d),
            }
        });
        let resid = DVector::from_iterator(n, pts.iter().map(|&(t, y)| y - (a - b / (t + c))));
        let step = jac.svd(true, true).solve(&resid, 1e-15).ok()?;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let (na, nb, nc) = (a + scale * step[0], b + scale * step[1], c + scale * step[2]);
            if t_lo + nc > 0.0 {
                let s = sse_of(pts, na, nb, nc);
                if s.is_finite() && s <= sse {
                    accepted = Some((na, nb, nc, s));
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((na, nb, nc, s)) => {
                let change = sse - s;
                a = na;
                b = nb;
                c = nc;
                sse = s;
                if change < SSE_TOL {
                    return Some((a, b, c, sse, iter));
                }
            }
            // no descent direction left: stationary point
            None => return Some((a, b, c, sse, iter)),
        }
    }
    None
}

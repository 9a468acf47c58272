//! Box-constrained quasi-Newton minimizer used for hyperparameter fitting.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Stop when the projected gradient's ∞-norm drops below this.
    pub grad_tol: f64,
    /// Stop when an accepted step improves the objective by less than
    /// `f_tol·max(1, |f|)`.
    pub f_tol: f64,
    pub memory: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            max_iter: 200,
            grad_tol: 1e-6,
            f_tol: 1e-12,
            memory: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    FunctionChange,
    MaxIter,
    LineSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn projected_grad_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..x.len() {
        let blocked = (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0);
        if !blocked {
            m = m.max(g[i].abs());
        }
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes over the box `[lo, hi]`. `fg` returns the value and gradient
/// and `fv` the value alone; either returns `None` where the objective is
/// undefined (treated as +∞).
///
/// Directions come from the L-BFGS two-loop recursion restricted to
/// variables not pinned at a bound. Steps use Armijo backtracking on the
/// projected path, shrinking by safeguarded quadratic interpolation; only
/// the first trial of each line search and the accepted point pay for a
/// gradient.
pub fn minimize_box<F, V>(mut fg: F, mut fv: V, x0: &[f64], lo: &[f64], hi: &[f64], opts: &OptimOptions) -> Option<OptimResult>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    V: FnMut(&[f64]) -> Option<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut evaluations = 1;
    let (mut fx, mut g) = fg(&x)?;
    if !fx.is_finite() {
        return None;
    }
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let stop = loop {
        if projected_grad_norm(&x, &g, lo, hi) < opts.grad_tol {
            break StopReason::Gradient;
        }
        if iterations >= opts.max_iter {
            break StopReason::MaxIter;
        }
        iterations += 1;

        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let mut accepted = None;
        for attempt in 0..2 {
            let use_memory = attempt == 0 && !mem.is_empty();
            let mut d: Vec<f64> = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
            if use_memory {
                let mut alphas = Vec::with_capacity(mem.len());
                for (s, y, rho) in mem.iter().rev() {
                    let a = rho * dot(s, &d);
                    for i in 0..n {
                        d[i] -= a * y[i];
                    }
                    alphas.push(a);
                }
                let (s, y, _) = mem.back().unwrap();
                let gamma = dot(s, y) / dot(y, y);
                for v in d.iter_mut() {
                    *v *= gamma;
                }
                for ((s, y, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
                    let b = rho * dot(y, &d);
                    for i in 0..n {
                        d[i] += (a - b) * s[i];
                    }
                }
                for i in 0..n {
                    if !free[i] {
                        d[i] = 0.0;
                    }
                }
                if dot(&d, &g) >= 0.0 {
                    continue;
                }
            }
            let mut t = if use_memory {
                1.0
            } else {
                let gmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if gmax > 0.0 {
                    (1.0 / gmax).min(1.0)
                } else {
                    1.0
                }
            };
            for trial in 0..40 {
                let mut xn: Vec<f64> = (0..n).map(|i| x[i] + t * d[i]).collect();
                project(&mut xn, lo, hi);
                let step: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
                if step.iter().all(|v| v.abs() < 1e-10) {
                    break;
                }
                let decrease = dot(&g, &step);
                if decrease >= 0.0 {
                    t *= 0.5;
                    continue;
                }
                evaluations += 1;
                let (fn_, gn) = if trial == 0 {
                    match fg(&xn) {
                        Some((v, gv)) => (v, Some(gv)),
                        None => (f64::INFINITY, None),
                    }
                } else {
                    (fv(&xn).unwrap_or(f64::INFINITY), None)
                };
                if fn_.is_finite() && fn_ <= fx + 1e-4 * decrease {
                    let gn = match gn {
                        Some(gv) => gv,
                        None => match fg(&xn) {
                            Some((_, gv)) => gv,
                            None => break,
                        },
                    };
                    accepted = Some((xn, fn_, gn));
                    break;
                }
                // minimizer of the quadratic through f(x), its slope along
                // the step and the rejected value, kept within [0.1t, 0.5t]
                let shrink = if fn_.is_finite() {
                    let denom = 2.0 * (fn_ - fx - decrease);
                    if denom > 0.0 {
                        (-decrease / denom).clamp(0.1, 0.5)
                    } else {
                        0.5
                    }
                } else {
                    0.25
                };
                t *= shrink;
            }
            if accepted.is_some() {
                break;
            }
            mem.clear();
        }
        let Some((xn, fn_, gn)) = accepted else {
            break StopReason::LineSearch;
        };
        let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(1e-300) {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        let improvement = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if improvement <= opts.f_tol * fx.abs().max(1.0) {
            break StopReason::FunctionChange;
        }
    };
    Some(OptimResult {
        x,
        f: fx,
        iterations,
        evaluations,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Some((f, g))
    }

    #[test]
    fn unconstrained_rosenbrock() {
        let opts = OptimOptions { max_iter: 500, f_tol: 0.0, ..Default::default() };
        let r = minimize_box(rosenbrock, |x| rosenbrock(x).map(|r| r.0), &[-1.2, 1.0], &[-5.0; 2], &[5.0; 2], &opts).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn active_bound() {
        // minimum of (x-3)² + (y+1)² on [0,2]×[0,2] sits at (2, 0)
        let f = |x: &[f64]| Some(((x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2), vec![2.0 * (x[0] - 3.0), 2.0 * (x[1] + 1.0)]));
        let r = minimize_box(f, |x| f(x).map(|r| r.0), &[1.0, 1.0], &[0.0; 2], &[2.0; 2], &OptimOptions::default()).unwrap();
        assert_eq!(r.x, vec![2.0, 0.0]);
        assert_eq!(r.stop, StopReason::Gradient);
    }

    #[test]
    fn undefined_region_is_avoided() {
        // log barrier: undefined for x <= 0
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                None
            } else {
                Some((x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]]))
            }
        };
        let r = minimize_box(f, |x| f(x).map(|r| r.0), &[5.0], &[-10.0], &[10.0], &OptimOptions::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-5);
    }
}

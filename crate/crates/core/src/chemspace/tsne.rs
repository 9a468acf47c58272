use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ChemspaceError, DistanceMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub seed: u64,
    /// Record the KL divergence every this many iterations.
    pub kl_every: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            seed: 0,
            kl_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    /// (iteration count completed, KL(P‖Q)) pairs.
    pub kl_history: Vec<(usize, f64)>,
}

impl TsneResult {
    pub fn kl_at(&self, iteration: usize) -> Option<f64> {
        self.kl_history.iter().find(|(i, _)| *i == iteration).map(|(_, k)| *k)
    }
}

const ENTROPY_TOL: f64 = 1e-5;
const SEARCH_STEPS: usize = 50;

/// Row-conditional affinities for one point with Gaussian precision
/// `beta` on squared distances, and the row entropy (nats).
fn conditional_row(sq: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let min = sq.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, d) in sq.iter().enumerate() {
        out[j] = if j == i { 0.0 } else { (-(d - min) * beta).exp() };
        sum += out[j];
    }
    let mut h = 0.0;
    for (j, d) in sq.iter().enumerate() {
        if j != i {
            out[j] /= sum;
            // H = log Σ + β·E[d − min]
            h += out[j] * (d - min);
        }
    }
    sum.ln() + beta * h
}

/// Row-conditional affinities, each row's entropy matched to ln(perplexity)
/// by bisection on its precision.
fn conditional_probabilities(d: &DistanceMatrix, perplexity: f64) -> Vec<f64> {
    let n = d.n;
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    let mut sq = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            sq[j] = d.get(i, j).powi(2);
        }
        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        let row = &mut p[i * n..(i + 1) * n];
        for _ in 0..SEARCH_STEPS {
            let h = conditional_row(&sq, i, beta, row);
            let diff = h - target;
            if diff.abs() < ENTROPY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        conditional_row(&sq, i, beta, row);
    }
    p
}

/// Symmetrized joint affinities P (row-major n×n) matched to `perplexity`.
pub fn joint_probabilities(d: &DistanceMatrix, perplexity: f64) -> Result<Vec<f64>, ChemspaceError> {
    let n = d.n;
    if !(perplexity > 0.0) || (n as f64) <= 3.0 * perplexity {
        return Err(ChemspaceError::PerplexityTooLarge { perplexity, n });
    }
    let p = conditional_probabilities(d, perplexity);
    let mut joint = vec![0.0; n * n];
    let scale = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            joint[i * n + j] = ((p[i * n + j] + p[j * n + i]) / scale).max(1e-12);
        }
        joint[i * n + i] = 0.0;
    }
    Ok(joint)
}

fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                z += 1.0 / (1.0 + sq_dist(&y[i], &y[j]));
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let q = (1.0 / (1.0 + sq_dist(&y[i], &y[j])) / z).max(1e-12);
                let pij = p[i * n + j];
                kl += pij * (pij / q).ln();
            }
        }
    }
    kl
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// For each point, the lowest index it cannot be told apart from by the
/// distance matrix (zero distance and identical distances to all others).
fn duplicate_representatives(d: &DistanceMatrix) -> Vec<usize> {
    let n = d.n;
    let mut rep: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if rep[j] != j || d.get(i, j) != 0.0 {
                continue;
            }
            if (0..n).all(|k| k == i || k == j || d.get(i, k) == d.get(j, k)) {
                rep[i] = j;
                break;
            }
        }
    }
    rep
}

/// Exact t-SNE on a precomputed distance matrix.
///
/// Conditional affinities use squared distances; step sizes adapt with the
/// usual per-coordinate gains on top of momentum. Points with identical
/// distance rows share their initial position and move together.
pub fn tsne(d: &DistanceMatrix, cfg: &TsneConfig) -> Result<TsneResult, ChemspaceError> {
    let n = d.n;
    let p = joint_probabilities(d, cfg.perplexity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = Normal::new(0.0, 1e-4).expect("fixed init spread");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [init.sample(&mut rng), init.sample(&mut rng)]).collect();
    let rep = duplicate_representatives(d);
    let has_twins = rep.iter().enumerate().any(|(i, &r)| r != i);
    for i in 0..n {
        y[i] = y[rep[i]];
    }
    let mut group_size = vec![0usize; n];
    for &r in &rep {
        group_size[r] += 1;
    }
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0; n * n];
    let mut grad = vec![[0.0; 2]; n];
    let mut kl_history = Vec::new();

    for it in 0..cfg.iterations {
        let exaggerate = if it < cfg.exaggeration_iters { cfg.exaggeration } else { 1.0 };
        let momentum = if it < cfg.exaggeration_iters { cfg.initial_momentum } else { cfg.final_momentum };
        let mut z = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 1.0 / (1.0 + sq_dist(&y[i], &y[j]));
                num[i * n + j] = v;
                num[j * n + i] = v;
                z += 2.0 * v;
            }
        }
        for i in 0..n {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[i * n + j];
                let coef = (exaggerate * p[i * n + j] - w / z) * w;
                g[0] += coef * (y[i][0] - y[j][0]);
                g[1] += coef * (y[i][1] - y[j][1]);
            }
            grad[i] = [4.0 * g[0], 4.0 * g[1]];
        }
        if has_twins {
            let mut sum = vec![[0.0; 2]; n];
            for i in 0..n {
                sum[rep[i]][0] += grad[i][0];
                sum[rep[i]][1] += grad[i][1];
            }
            for i in 0..n {
                let k = group_size[rep[i]] as f64;
                grad[i] = [sum[rep[i]][0] / k, sum[rep[i]][1] / k];
            }
        }
        for i in 0..n {
            for k in 0..2 {
                let same_sign = (grad[i][k] > 0.0) == (update[i][k] > 0.0);
                gains[i][k] = if same_sign { (gains[i][k] * 0.8).max(0.01) } else { gains[i][k] + 0.2 };
                update[i][k] = momentum * update[i][k] - cfg.learning_rate * gains[i][k] * grad[i][k];
                y[i][k] += update[i][k];
            }
        }
        // keep the embedding centred
        let (mx, my) = y.iter().fold((0.0, 0.0), |(a, b), v| (a + v[0], b + v[1]));
        for v in y.iter_mut() {
            v[0] -= mx / n as f64;
            v[1] -= my / n as f64;
        }
        let done = it + 1;
        if cfg.kl_every > 0 && (done % cfg.kl_every == 0 || done == cfg.iterations) {
            kl_history.push((done, kl_divergence(&p, &y)));
        }
    }
    Ok(TsneResult { coords: y, kl_history })
}

//! Dense Cholesky kernels on row-major storage. Every inner loop is a
//! contiguous dot product, which keeps the O(n³) work cache friendly.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

/// Lower Cholesky factor L (A = LLᵀ), row-major with the strict upper
/// triangle zeroed.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Chol {
    pub n: usize,
    pub l: Vec<f64>,
}

impl Chol {
    /// Factors a symmetric matrix given row-major; only the lower triangle
    /// is read. `None` when the matrix is not numerically positive definite.
    pub fn new(mut a: Vec<f64>, n: usize) -> Option<Chol> {
        for i in 0..n {
            for j in 0..=i {
                let (head, row_i) = a.split_at_mut(i * n);
                let s = if j < i {
                    let row_j = &head[j * n..j * n + j];
                    row_i[j] - dot(&row_i[..j], row_j)
                } else {
                    row_i[i] - dot(&row_i[..i], &row_i[..i])
                };
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    row_i[i] = s.sqrt();
                } else {
                    row_i[j] = s / head[j * n + j];
                }
            }
            for v in &mut a[i * n + i + 1..(i + 1) * n] {
                *v = 0.0;
            }
        }
        Some(Chol { n, l: a })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.l[i * self.n..(i + 1) * self.n]
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>()
    }

    /// z = L⁻¹ b
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut z = b.to_vec();
        for i in 0..self.n {
            let row = self.row(i);
            z[i] = (z[i] - dot(&row[..i], &z[..i])) / row[i];
        }
        z
    }

    /// x = L⁻ᵀ z
    pub fn solve_upper(&self, z: &[f64]) -> Vec<f64> {
        let mut x = z.to_vec();
        for i in (0..self.n).rev() {
            let row = self.row(i);
            x[i] /= row[i];
            let xi = x[i];
            for k in 0..i {
                x[k] -= row[k] * xi;
            }
        }
        x
    }

    /// x = A⁻¹ b
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// Full A⁻¹, row-major. Builds U = L⁻ᵀ (upper, row-major) and then
    /// A⁻¹ = U Uᵀ.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut u = vec![0.0; n * n];
        for j in 0..n {
            u[j * n + j] = 1.0 / self.l[j * n + j];
            for i in j + 1..n {
                let li = self.row(i);
                let s = dot(&li[j..i], &u[j * n + j..j * n + i]);
                u[j * n + i] = -s / li[i];
            }
        }
        let mut inv = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..=a {
                // rows of U are zero left of the diagonal
                let v = dot(&u[a * n + a..(a + 1) * n], &u[b * n + a..(b + 1) * n]);
                inv[a * n + b] = v;
                inv[b * n + a] = v;
            }
        }
        inv
    }
}

//! Small dense LU with partial pivoting.

pub(crate) struct Lu {
    n: usize,
    /// Row-major packed `L` (unit diagonal, below) and `U` (on and above).
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factors the `n x n` matrix whose `j`-th column is `columns[j]`.
    /// Returns `None` when a pivot falls below `tol` in magnitude.
    pub(crate) fn from_columns(columns: &[&[f64]], tol: f64) -> Option<Self> {
        let n = columns.len();
        let mut lu = vec![0.0; n * n];
        for (j, col) in columns.iter().enumerate() {
            for i in 0..n {
                lu[i * n + j] = col[i];
            }
        }
        Self::factor(n, lu, tol)
    }

    pub(crate) fn from_rows(n: usize, a: Vec<f64>, tol: f64) -> Option<Self> {
        Self::factor(n, a, tol)
    }

    fn factor(n: usize, mut lu: Vec<f64>, tol: f64) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&a, &b| lu[a * n + k].abs().total_cmp(&lu[b * n + k].abs()).then(b.cmp(&a)))
                .unwrap();
            if lu[p * n + k].abs() <= tol {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / piv;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Some(Self { n, lu, perm })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub(crate) fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // A = P^T L U, so A^T x = U^T L^T P x = b.
        let mut w = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                w[i] -= self.lu[j * n + i] * w[j];
            }
            w[i] /= self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                w[i] -= self.lu[j * n + i] * w[j];
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = w[k];
        }
        x
    }
}

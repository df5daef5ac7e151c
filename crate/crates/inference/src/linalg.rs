//! Dense lower-triangular linear algebra for small covariance matrices.
//!
//! Matrices are stored row-major in `Vec<f64>` with an explicit dimension;
//! series lengths here are under ~100 points so nothing fancier is needed.

/// Row-major square matrix view helpers.
#[derive(Clone, Debug)]
pub struct Mat {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Mat {
        Mat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn eye(n: usize) -> Mat {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
/// Returns `None` when a pivot is not strictly positive.
pub fn cholesky(a: &Mat) -> Option<Mat> {
    let n = a.n;
    let mut l = Mat::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l.set(i, j, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Some(l)
}

/// Solve L x = b for lower-triangular L.
pub fn solve_lower(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.n;
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= l.get(i, k) * x[k];
        }
        x[i] /= l.get(i, i);
    }
    x
}

/// Solve L^T x = b for lower-triangular L.
pub fn solve_lower_transpose(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.n;
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            x[i] -= l.get(k, i) * x[k];
        }
        x[i] /= l.get(i, i);
    }
    x
}

/// Solve A x = b given A's lower Cholesky factor.
pub fn chol_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    solve_lower_transpose(l, &solve_lower(l, b))
}

/// y = L v.
pub fn matvec_lower(l: &Mat, v: &[f64]) -> Vec<f64> {
    let n = l.n;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for k in 0..=i {
            s += l.get(i, k) * v[k];
        }
        y[i] = s;
    }
    y
}

/// y = L^T v.
pub fn matvec_lower_transpose(l: &Mat, v: &[f64]) -> Vec<f64> {
    let n = l.n;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for k in i..n {
            s += l.get(k, i) * v[k];
        }
        y[i] = s;
    }
    y
}

/// Adjoint of the Cholesky factorization: given L = chol(A) and the adjoint
/// L_bar, return A_bar (lower triangle holds the symmetric sensitivity,
/// i.e. dF = sum_{i>=j} A_bar[i][j] dA[i][j] for symmetric perturbations dA).
///
/// Standard level-1 reverse of the unblocked algorithm, sweeping the forward
/// loop backwards.
pub fn cholesky_reverse(l: &Mat, l_bar: &Mat) -> Mat {
    let n = l.n;
    let mut lb = l_bar.clone();
    let mut a_bar = Mat::zeros(n);
    for i in (0..n).rev() {
        for j in (0..=i).rev() {
            let g;
            if i == j {
                // forward: L[i][i] = sqrt(s)
                g = 0.5 * lb.get(i, i) / l.get(i, i);
            } else {
                // forward: L[i][j] = s / L[j][j]
                g = lb.get(i, j) / l.get(j, j);
                let v = lb.get(j, j) - g * l.get(i, j);
                lb.set(j, j, v);
            }
            a_bar.set(i, j, g);
            // forward: s = A[i][j] - sum_k L[i][k] L[j][k]
            for k in 0..j {
                let vi = lb.get(i, k) - g * l.get(j, k);
                lb.set(i, k, vi);
                let vj = lb.get(j, k) - g * l.get(i, k);
                lb.set(j, k, vj);
            }
        }
    }
    a_bar
}

//! Kernel algebra, Gram matrices, noncentered latent priors, and exact
//! Gaussian conditioning.
//!
//! Inputs are scalar month indices. Kernel hyperparameters are either fixed
//! or refer to a slot in a caller-supplied vector, so one kernel tree serves
//! both fixed-hyperparameter prediction and sampled-hyperparameter fits.

use std::rc::Rc;

use crate::linalg::{
    chol_solve, cholesky, cholesky_reverse, matvec_lower, matvec_lower_transpose, solve_lower, Mat,
};
use crate::tape::{CustomOp, Tape, Var};
use crate::Error;

pub const DEFAULT_JITTER: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub enum Hyper {
    Fixed(f64),
    /// Index into the slot vector passed at evaluation time.
    Slot(usize),
}

impl Hyper {
    fn get(&self, slots: &[f64]) -> f64 {
        match *self {
            Hyper::Fixed(v) => v,
            Hyper::Slot(i) => slots[i],
        }
    }

    fn accum(&self, grad: &mut [f64], g: f64) {
        if let Hyper::Slot(i) = *self {
            grad[i] += g;
        }
    }
}

#[derive(Clone, Debug)]
pub enum KernelExpr {
    /// (1 + s + s^2/3) e^{-s} with s = sqrt(5) r / len, scaled by eta^2.
    Matern52 { len: Hyper, eta: Hyper },
    /// eta^2 exp(-sin^2(pi d / period) / (2 len^2)).
    Periodic {
        period: Hyper,
        len: Hyper,
        eta: Hyper,
    },
    /// delta^2 on exact input coincidence, else 0.
    WhiteNoise { delta: Hyper },
    Sum(Box<KernelExpr>, Box<KernelExpr>),
    Product(Box<KernelExpr>, Box<KernelExpr>),
}

impl KernelExpr {
    pub fn sum(a: KernelExpr, b: KernelExpr) -> KernelExpr {
        KernelExpr::Sum(Box::new(a), Box::new(b))
    }

    pub fn product(a: KernelExpr, b: KernelExpr) -> KernelExpr {
        KernelExpr::Product(Box::new(a), Box::new(b))
    }

    /// Number of slots this tree references (1 + max slot index).
    pub fn n_slots(&self) -> usize {
        match self {
            KernelExpr::Matern52 { len, eta } => slot_hi(&[len, eta]),
            KernelExpr::Periodic { period, len, eta } => slot_hi(&[period, len, eta]),
            KernelExpr::WhiteNoise { delta } => slot_hi(&[delta]),
            KernelExpr::Sum(a, b) | KernelExpr::Product(a, b) => a.n_slots().max(b.n_slots()),
        }
    }

    pub fn eval(&self, x: f64, x2: f64, slots: &[f64]) -> f64 {
        match self {
            KernelExpr::Matern52 { len, eta } => {
                let l = len.get(slots);
                let e = eta.get(slots);
                let s = 5.0f64.sqrt() * (x - x2).abs() / l;
                e * e * (1.0 + s + s * s / 3.0) * (-s).exp()
            }
            KernelExpr::Periodic { period, len, eta } => {
                let t = period.get(slots);
                let l = len.get(slots);
                let e = eta.get(slots);
                let g = (std::f64::consts::PI * (x - x2) / t).sin();
                e * e * (-g * g / (2.0 * l * l)).exp()
            }
            KernelExpr::WhiteNoise { delta } => {
                if x == x2 {
                    let d = delta.get(slots);
                    d * d
                } else {
                    0.0
                }
            }
            KernelExpr::Sum(a, b) => a.eval(x, x2, slots) + b.eval(x, x2, slots),
            KernelExpr::Product(a, b) => a.eval(x, x2, slots) * b.eval(x, x2, slots),
        }
    }

    /// Evaluate and accumulate `scale * dk/dslot` into `grad`.
    fn eval_grad(&self, x: f64, x2: f64, slots: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        match self {
            KernelExpr::Matern52 { len, eta } => {
                let l = len.get(slots);
                let e = eta.get(slots);
                let s = 5.0f64.sqrt() * (x - x2).abs() / l;
                let es = (-s).exp();
                let base = (1.0 + s + s * s / 3.0) * es;
                len.accum(grad, scale * e * e * (s * s / 3.0) * (1.0 + s) * es / l);
                eta.accum(grad, scale * 2.0 * e * base);
                e * e * base
            }
            KernelExpr::Periodic { period, len, eta } => {
                let t = period.get(slots);
                let l = len.get(slots);
                let e = eta.get(slots);
                let arg = std::f64::consts::PI * (x - x2) / t;
                let g = arg.sin();
                let eq = (-g * g / (2.0 * l * l)).exp();
                len.accum(grad, scale * e * e * eq * g * g / (l * l * l));
                period.accum(grad, scale * e * e * eq * g * arg.cos() * arg / (t * l * l));
                eta.accum(grad, scale * 2.0 * e * eq);
                e * e * eq
            }
            KernelExpr::WhiteNoise { delta } => {
                if x == x2 {
                    let d = delta.get(slots);
                    delta.accum(grad, scale * 2.0 * d);
                    d * d
                } else {
                    0.0
                }
            }
            KernelExpr::Sum(a, b) => {
                a.eval_grad(x, x2, slots, scale, grad) + b.eval_grad(x, x2, slots, scale, grad)
            }
            KernelExpr::Product(a, b) => {
                let va = a.eval(x, x2, slots);
                let vb = b.eval(x, x2, slots);
                a.eval_grad(x, x2, slots, scale * vb, grad);
                b.eval_grad(x, x2, slots, scale * va, grad);
                va * vb
            }
        }
    }
}

fn slot_hi(hs: &[&Hyper]) -> usize {
    hs.iter()
        .filter_map(|h| match h {
            Hyper::Slot(i) => Some(i + 1),
            Hyper::Fixed(_) => None,
        })
        .max()
        .unwrap_or(0)
}

/// Exact kernel value; public single-pair entry point.
pub fn kernel_eval(k: &KernelExpr, x: f64, x2: f64, slots: &[f64]) -> f64 {
    k.eval(x, x2, slots)
}

fn build_gram(k: &KernelExpr, xs: &[f64], slots: &[f64], jitter: f64) -> Mat {
    let n = xs.len();
    let mut g = Mat::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v = k.eval(xs[i], xs[j], slots);
            g.set(i, j, v);
            g.set(j, i, v);
        }
        g.set(i, i, g.get(i, i) + jitter);
    }
    g
}

/// Gershgorin lower bound on the smallest eigenvalue, reported on Cholesky
/// failure.
fn min_eig_estimate(g: &Mat) -> f64 {
    let n = g.n;
    (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| g.get(i, j).abs()).sum();
            g.get(i, i) - off
        })
        .fold(f64::INFINITY, f64::min)
}

/// Gram matrix plus its Cholesky factor. A failed factorization is retried
/// once with jitter scaled by 10.
pub fn gram(
    k: &KernelExpr,
    xs: &[f64],
    slots: &[f64],
    jitter: f64,
) -> Result<(Mat, Mat), Error> {
    let g = build_gram(k, xs, slots, jitter);
    if let Some(l) = cholesky(&g) {
        return Ok((g, l));
    }
    let g10 = build_gram(k, xs, slots, jitter * 10.0);
    if let Some(l) = cholesky(&g10) {
        return Ok((g10, l));
    }
    Err(Error::Numerical(format!(
        "covariance Cholesky failed; smallest eigenvalue estimate {:.3e}",
        min_eig_estimate(&g10)
    )))
}

/// f = L fw, the noncentered latent draw. With fw ~ N(0, I) the prior of f
/// is exactly MVNormal(0, K).
pub fn latent_noncentered(
    k: &KernelExpr,
    xs: &[f64],
    slots: &[f64],
    fw: &[f64],
    jitter: f64,
) -> Result<Vec<f64>, Error> {
    assert_eq!(xs.len(), fw.len());
    let (_, l) = gram(k, xs, slots, jitter)?;
    Ok(matvec_lower(&l, fw))
}

/// Exact zero-mean Gaussian conditioning: mean = K*' Kxx^-1 f,
/// cov = K** - K*' Kxx^-1 K* (symmetrized).
pub fn gp_condition(
    xs: &[f64],
    f: &[f64],
    k: &KernelExpr,
    slots: &[f64],
    x_new: &[f64],
    jitter: f64,
) -> Result<(Vec<f64>, Mat), Error> {
    assert_eq!(xs.len(), f.len());
    let n = xs.len();
    let m = x_new.len();
    let (_, l) = gram(k, xs, slots, jitter)?;
    // Cross-covariance columns.
    let mut kx = vec![vec![0.0; n]; m];
    for (c, &xn) in x_new.iter().enumerate() {
        for (i, &xi) in xs.iter().enumerate() {
            kx[c][i] = k.eval(xi, xn, slots);
        }
    }
    let alpha = chol_solve(&l, f);
    let mean: Vec<f64> = kx.iter().map(|col| dot(col, &alpha)).collect();
    // cov = K** - V'V with V = L^-1 K*.
    let vs: Vec<Vec<f64>> = kx.iter().map(|col| solve_lower(&l, col)).collect();
    let mut cov = Mat::zeros(m);
    for a in 0..m {
        for b in 0..=a {
            let prior = k.eval(x_new[a], x_new[b], slots);
            let v = prior - dot(&vs[a], &vs[b]);
            cov.set(a, b, v);
            cov.set(b, a, v);
        }
    }
    Ok((mean, cov))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Custom tape op for the latent block f = chol(K(theta) + jitter I) fw.
///
/// Inputs: the slot values followed by the whitened vector; outputs: f.
/// The backward pass runs the Cholesky reverse and the analytic kernel
/// hyperparameter derivatives instead of taping O(n^3) scalars.
struct LatentGpOp {
    kernel: KernelExpr,
    xs: Vec<f64>,
    jitter: f64,
    n_slots: usize,
}

impl LatentGpOp {
    fn factor(&self, slots: &[f64]) -> Option<(Mat, f64)> {
        for mult in [1.0, 10.0] {
            let g = build_gram(&self.kernel, &self.xs, slots, self.jitter * mult);
            if let Some(l) = cholesky(&g) {
                return Some((l, self.jitter * mult));
            }
        }
        None
    }
}

impl CustomOp for LatentGpOp {
    fn forward(&self, inputs: &[f64]) -> Vec<f64> {
        let (slots, fw) = inputs.split_at(self.n_slots);
        match self.factor(slots) {
            Some((l, _)) => matvec_lower(&l, fw),
            // Poison: the program maps non-finite density to a rejection.
            None => vec![f64::NAN; self.xs.len()],
        }
    }

    fn backward(&self, inputs: &[f64], _outputs: &[f64], out_adj: &[f64]) -> Vec<f64> {
        let (slots, fw) = inputs.split_at(self.n_slots);
        let n = self.xs.len();
        let (l, _) = match self.factor(slots) {
            Some(v) => v,
            None => return vec![0.0; inputs.len()],
        };
        // f = L fw: fw_adj = L' f_adj, L_adj = f_adj fw' (lower triangle).
        let fw_adj = matvec_lower_transpose(&l, out_adj);
        let mut l_adj = Mat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                l_adj.set(i, j, out_adj[i] * fw[j]);
            }
        }
        let k_adj = cholesky_reverse(&l, &l_adj);
        // Chain into the kernel hyperparameters; K_adj's lower triangle is
        // the symmetric-perturbation sensitivity, matching a kernel change
        // that moves (i,j) and (j,i) together.
        let mut grad = vec![0.0; inputs.len()];
        for i in 0..n {
            for j in 0..=i {
                let a = k_adj.get(i, j);
                if a != 0.0 {
                    self.kernel
                        .eval_grad(self.xs[i], self.xs[j], slots, a, &mut grad[..self.n_slots]);
                }
            }
        }
        grad[self.n_slots..].copy_from_slice(&fw_adj);
        grad
    }
}

/// Record the latent block on a tape: given slot variables and the whitened
/// vector, return the realized latent values as tape variables.
pub fn latent_gp_vars<'t>(
    tape: &'t Tape,
    kernel: &KernelExpr,
    xs: &[f64],
    jitter: f64,
    slot_vars: &[Var<'t>],
    whitened: &[Var<'t>],
) -> Vec<Var<'t>> {
    assert_eq!(xs.len(), whitened.len());
    assert!(kernel.n_slots() <= slot_vars.len());
    let op = LatentGpOp {
        kernel: kernel.clone(),
        xs: xs.to_vec(),
        jitter,
        n_slots: slot_vars.len(),
    };
    let mut inputs = slot_vars.to_vec();
    inputs.extend_from_slice(whitened);
    tape.custom(Rc::new(op), &inputs)
}

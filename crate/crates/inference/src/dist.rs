//! Distribution families: log-densities, random generation, and the
//! tape-generic density kernels the model suite composes.

use rand::Rng;
use rand_distr::Distribution;
use statrs::function::gamma::ln_gamma;

use crate::tape::Scalar;
use crate::Error;

pub const LN_2PI: f64 = 1.8378770664093453;

/// Tape-generic log-density kernels. Every argument is a [`Scalar`] so the
/// same formula serves plain evaluation and gradient taping; data constants
/// are lifted with `Scalar::lit`.
pub mod density {
    use super::{ln_gamma, Scalar, LN_2PI};

    pub fn normal<S: Scalar>(x: S, mu: S, sigma: S) -> S {
        let z = (x - mu) / sigma;
        let half = x.lit(0.5);
        -half * x.lit(LN_2PI) - sigma.ln() - half * z * z
    }

    /// Half-Normal(sigma) on x >= 0: folded normal, extra log 2.
    pub fn half_normal<S: Scalar>(x: S, sigma: S) -> S {
        normal(x, x.lit(0.0), sigma) + x.lit(std::f64::consts::LN_2)
    }

    pub fn half_cauchy<S: Scalar>(x: S, gamma: S) -> S {
        let z = x / gamma;
        let one = x.lit(1.0);
        x.lit((2.0 / std::f64::consts::PI).ln()) - gamma.ln() - (one + z * z).ln()
    }

    /// Shape-rate Gamma: mean alpha/beta.
    pub fn gamma<S: Scalar>(x: S, alpha: S, beta: S) -> S {
        let one = x.lit(1.0);
        alpha * beta.ln() - alpha.ln_gamma() + (alpha - one) * x.ln() - beta * x
    }

    pub fn exponential<S: Scalar>(x: S, lambda: S) -> S {
        lambda.ln() - lambda * x
    }

    /// Student-t with precision-like third parameter: scale = lambda^(-1/2).
    pub fn student_t_prec<S: Scalar>(x: S, nu: S, mu: S, lambda: S) -> S {
        let half = x.lit(0.5);
        let one = x.lit(1.0);
        let z2 = (x - mu) * (x - mu) * lambda;
        ((nu + one) * half).ln_gamma() - (nu * half).ln_gamma()
            - half * (nu * x.lit(std::f64::consts::PI)).ln()
            + half * lambda.ln()
            - (nu + one) * half * (one + z2 / nu).ln()
    }

    pub fn poisson<S: Scalar>(k: f64, lambda: S) -> S {
        lambda.lit(k) * lambda.ln() - lambda - lambda.lit(ln_gamma(k + 1.0))
    }

    /// Poisson mass with the intensity given on the log scale (exp link).
    pub fn poisson_log<S: Scalar>(k: f64, log_lambda: S) -> S {
        log_lambda.lit(k) * log_lambda - log_lambda.exp() - log_lambda.lit(ln_gamma(k + 1.0))
    }

    pub fn binomial<S: Scalar>(k: u64, n: u64, p: S) -> S {
        let one = p.lit(1.0);
        let ln_choose = ln_gamma(n as f64 + 1.0)
            - ln_gamma(k as f64 + 1.0)
            - ln_gamma((n - k) as f64 + 1.0);
        p.lit(ln_choose) + p.lit(k as f64) * p.ln() + p.lit((n - k) as f64) * (one - p).ln()
    }

    /// Binomial mass with success probability given on the logit scale;
    /// numerically stable for extreme logits.
    pub fn binomial_logit<S: Scalar>(k: u64, n: u64, t: S) -> S {
        let ln_choose = ln_gamma(n as f64 + 1.0)
            - ln_gamma(k as f64 + 1.0)
            - ln_gamma((n - k) as f64 + 1.0);
        t.lit(ln_choose) - t.lit(k as f64) * (-t).ln_1p_exp() - t.lit((n - k) as f64) * t.ln_1p_exp()
    }

    /// Location/overdispersion negative binomial: mean mu, variance
    /// mu + mu^2/phi.
    pub fn neg_binomial<S: Scalar>(n: f64, mu: S, phi: S) -> S {
        let denom = mu + phi;
        (phi + phi.lit(n)).ln_gamma() - phi.lit(ln_gamma(n + 1.0)) - phi.ln_gamma()
            + phi.lit(n) * (mu.ln() - denom.ln())
            + phi * (phi.ln() - denom.ln())
    }

    /// LKJ density over a lower Cholesky factor of a correlation matrix
    /// (row-major k*k slice), up to the normalizing constant. Includes the
    /// R -> L change of measure, so it pairs with the cholesky_corr
    /// constraint transform.
    pub fn lkj_cholesky<S: Scalar>(l: &[S], k: usize, eta: f64) -> S {
        let mut acc = l[0].lit(0.0);
        for i in 1..k {
            let c = (k - i - 1) as f64 + 2.0 * eta - 2.0;
            if c != 0.0 {
                acc = acc + l[i * k + i].ln() * l[0].lit(c);
            }
        }
        acc
    }

    pub fn dirichlet<S: Scalar>(x: &[S], alpha: &[f64]) -> S {
        let a0: f64 = alpha.iter().sum();
        let norm = ln_gamma(a0) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
        let mut acc = x[0].lit(norm);
        for (xi, &a) in x.iter().zip(alpha) {
            acc = acc + xi.ln() * xi.lit(a - 1.0);
        }
        acc
    }
}

/// A concrete distribution with fixed parameters.
#[derive(Clone, Debug)]
pub enum Dist {
    Normal { mu: f64, sigma: f64 },
    HalfNormal { sigma: f64 },
    HalfCauchy { gamma: f64 },
    /// Shape-rate: mean alpha/beta.
    Gamma { alpha: f64, beta: f64 },
    Exponential { lambda: f64 },
    /// Third parameter is precision-like: scale = lambda^(-1/2).
    StudentT { nu: f64, mu: f64, lambda: f64 },
    Binomial { n: u64, p: f64 },
    Poisson { lambda: f64 },
    NegBinomial { mu: f64, phi: f64 },
    Uniform { a: f64, b: f64 },
    Dirichlet { alpha: Vec<f64> },
}

/// Scale parameter sigma -> the precision-like third Student-t argument.
pub fn studentt_scale_to_precision(sigma: f64) -> f64 {
    1.0 / (sigma * sigma)
}

fn param_err(d: &Dist, msg: &str) -> Error {
    Error::Domain {
        param: format!("{d:?}"),
        msg: msg.to_string(),
    }
}

impl Dist {
    pub fn validate(&self) -> Result<(), Error> {
        let ok = match *self {
            Dist::Normal { sigma, .. } => sigma > 0.0,
            Dist::HalfNormal { sigma } => sigma > 0.0,
            Dist::HalfCauchy { gamma } => gamma > 0.0,
            Dist::Gamma { alpha, beta } => alpha > 0.0 && beta > 0.0,
            Dist::Exponential { lambda } => lambda > 0.0,
            Dist::StudentT { nu, lambda, .. } => nu > 0.0 && lambda > 0.0,
            Dist::Binomial { p, .. } => (0.0..=1.0).contains(&p),
            Dist::Poisson { lambda } => lambda > 0.0,
            Dist::NegBinomial { mu, phi } => mu > 0.0 && phi > 0.0,
            Dist::Uniform { a, b } => a < b,
            Dist::Dirichlet { ref alpha } => !alpha.is_empty() && alpha.iter().all(|&a| a > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(param_err(self, "invalid parameters"))
        }
    }

    /// Event dimension (1 for scalar families).
    pub fn event_dim(&self) -> usize {
        match self {
            Dist::Dirichlet { alpha } => alpha.len(),
            _ => 1,
        }
    }

    /// Log density/mass at `x`; -inf outside the support.
    pub fn logpdf(&self, x: &[f64]) -> Result<f64, Error> {
        self.validate()?;
        if x.len() != self.event_dim() {
            return Err(param_err(self, "wrong event dimension"));
        }
        let v = x[0];
        let lp = match *self {
            Dist::Normal { mu, sigma } => density::normal(v, mu, sigma),
            Dist::HalfNormal { sigma } => {
                if v < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    density::half_normal(v, sigma)
                }
            }
            Dist::HalfCauchy { gamma } => {
                if v < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    density::half_cauchy(v, gamma)
                }
            }
            Dist::Gamma { alpha, beta } => {
                if v <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    density::gamma(v, alpha, beta)
                }
            }
            Dist::Exponential { lambda } => {
                if v < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    density::exponential(v, lambda)
                }
            }
            Dist::StudentT { nu, mu, lambda } => density::student_t_prec(v, nu, mu, lambda),
            Dist::Binomial { n, p } => {
                if v < 0.0 || v > n as f64 || v.fract() != 0.0 {
                    f64::NEG_INFINITY
                } else if p == 0.0 {
                    if v == 0.0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else if p == 1.0 {
                    if v == n as f64 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    density::binomial(v as u64, n, p)
                }
            }
            Dist::Poisson { lambda } => {
                if v < 0.0 || v.fract() != 0.0 {
                    f64::NEG_INFINITY
                } else {
                    density::poisson(v, lambda)
                }
            }
            Dist::NegBinomial { mu, phi } => {
                if v < 0.0 || v.fract() != 0.0 {
                    f64::NEG_INFINITY
                } else {
                    density::neg_binomial(v, mu, phi)
                }
            }
            Dist::Uniform { a, b } => {
                if v < a || v > b {
                    f64::NEG_INFINITY
                } else {
                    -(b - a).ln()
                }
            }
            Dist::Dirichlet { ref alpha } => {
                if x.iter().any(|&xi| xi <= 0.0) || (x.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    f64::NEG_INFINITY
                } else {
                    density::dirichlet(x, alpha)
                }
            }
        };
        Ok(lp)
    }

    /// Convenience for scalar families.
    pub fn logpdf1(&self, x: f64) -> Result<f64, Error> {
        self.logpdf(std::slice::from_ref(&x))
    }

    /// `n` i.i.d. draws; each draw is `event_dim` values.
    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Result<Vec<Vec<f64>>, Error> {
        self.validate()?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.draw(rng));
        }
        Ok(out)
    }

    /// `n` i.i.d. scalar draws (panics on multivariate families).
    pub fn sample1<R: Rng>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>, Error> {
        assert_eq!(self.event_dim(), 1);
        Ok(self.sample(rng, n)?.into_iter().map(|v| v[0]).collect())
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match *self {
            Dist::Normal { mu, sigma } => {
                vec![rand_distr::Normal::new(mu, sigma).unwrap().sample(rng)]
            }
            Dist::HalfNormal { sigma } => {
                vec![rand_distr::Normal::new(0.0, sigma)
                    .unwrap()
                    .sample(rng)
                    .abs()]
            }
            Dist::HalfCauchy { gamma } => {
                vec![rand_distr::Cauchy::new(0.0, gamma)
                    .unwrap()
                    .sample(rng)
                    .abs()]
            }
            Dist::Gamma { alpha, beta } => {
                vec![rand_distr::Gamma::new(alpha, 1.0 / beta).unwrap().sample(rng)]
            }
            Dist::Exponential { lambda } => {
                vec![rand_distr::Exp::new(lambda).unwrap().sample(rng)]
            }
            Dist::StudentT { nu, mu, lambda } => {
                let t: f64 = rand_distr::StudentT::new(nu).unwrap().sample(rng);
                vec![mu + t / lambda.sqrt()]
            }
            Dist::Binomial { n, p } => {
                vec![rand_distr::Binomial::new(n, p).unwrap().sample(rng) as f64]
            }
            Dist::Poisson { lambda } => {
                vec![rand_distr::Poisson::new(lambda).unwrap().sample(rng)]
            }
            Dist::NegBinomial { mu, phi } => {
                // Gamma-Poisson mixture: lambda ~ Gamma(phi, rate phi/mu).
                let lam: f64 = rand_distr::Gamma::new(phi, mu / phi).unwrap().sample(rng);
                if lam <= 0.0 {
                    return vec![0.0];
                }
                vec![rand_distr::Poisson::new(lam).unwrap().sample(rng)]
            }
            Dist::Uniform { a, b } => vec![rng.random_range(a..b)],
            Dist::Dirichlet { ref alpha } => {
                // Normalized independent Gammas.
                let gs: Vec<f64> = alpha
                    .iter()
                    .map(|&a| rand_distr::Gamma::new(a, 1.0).unwrap().sample(rng))
                    .collect();
                let s: f64 = gs.iter().sum();
                gs.into_iter().map(|g| g / s).collect()
            }
        }
    }
}

/// Mean and variance of NegBinomial(mu, phi): (mu, mu + mu^2/phi).
pub fn negbin_moments(mu: f64, phi: f64) -> Result<(f64, f64), Error> {
    if mu <= 0.0 || phi <= 0.0 {
        return Err(Error::Domain {
            param: "negbin".to_string(),
            msg: "mu and phi must be > 0".to_string(),
        });
    }
    Ok((mu, mu + mu * mu / phi))
}

/// LKJ log-density of a correlation structure, up to the family's
/// normalizing constant: (eta - 1) * log det(R). Accepts either a full
/// correlation matrix or its lower Cholesky factor (k*k row-major).
pub fn lkj_logdensity(mat: &[f64], k: usize, eta: f64) -> Result<f64, Error> {
    let err = |msg: &str| Error::Domain {
        param: "lkj".to_string(),
        msg: msg.to_string(),
    };
    if eta <= 0.0 {
        return Err(err("eta must be > 0"));
    }
    if mat.len() != k * k {
        return Err(err("matrix must be k x k"));
    }
    let is_lower = (0..k).all(|i| (i + 1..k).all(|j| mat[i * k + j] == 0.0));
    let log_det = if is_lower && (0..k).any(|i| (mat[i * k + i] - 1.0).abs() > 1e-9) {
        // Cholesky factor: rows must have unit norm.
        for i in 0..k {
            let norm: f64 = (0..=i).map(|j| mat[i * k + j].powi(2)).sum();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(err("factor rows must have unit norm"));
            }
        }
        2.0 * (0..k).map(|i| mat[i * k + i].ln()).sum::<f64>()
    } else {
        // Full correlation matrix.
        for i in 0..k {
            if (mat[i * k + i] - 1.0).abs() > 1e-9 {
                return Err(err("diagonal must be 1"));
            }
        }
        let m = crate::linalg::Mat {
            n: k,
            data: mat.to_vec(),
        };
        let l = crate::linalg::cholesky(&m)
            .ok_or_else(|| err("matrix is not positive definite"))?;
        2.0 * (0..k).map(|i| l.get(i, i).ln()).sum::<f64>()
    };
    Ok((eta - 1.0) * log_det)
}

/// Draw a lower Cholesky factor of an LKJ(eta)-distributed correlation
/// matrix via the canonical-partial-correlation construction: the CPC in
/// column j (0-indexed) is 2 Beta(a, a) - 1 with a = eta + (k - 2 - j)/2.
pub fn lkj_sample_cholesky<R: Rng>(rng: &mut R, k: usize, eta: f64) -> Vec<f64> {
    assert!(k >= 2 && eta > 0.0);
    let mut l = vec![0.0; k * k];
    l[0] = 1.0;
    for i in 1..k {
        let mut acc = 1.0f64;
        for j in 0..i {
            let a = eta + (k as f64 - 2.0 - j as f64) / 2.0;
            let b: f64 = rand_distr::Beta::new(a, a).unwrap().sample(rng);
            let z = 2.0 * b - 1.0;
            l[i * k + j] = z * acc.sqrt();
            acc *= 1.0 - z * z;
        }
        l[i * k + i] = acc.sqrt();
    }
    l
}

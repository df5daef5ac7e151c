//! Constraint transforms between unconstrained sampling space and the
//! constrained parameter space, with log-Jacobian corrections.
//!
//! Each transform maps all of R^m into the constraint set, so the sampler
//! works on an unconstrained vector and the density picks up
//! log|det dx/du| from [`Constraint::push_constrained`].

use crate::tape::Scalar;
use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    Real,
    Positive,
    UnitInterval,
    /// K nonnegative values summing to 1; K-1 free values.
    Simplex(usize),
    /// Lower Cholesky factor of a KxK correlation matrix, stored row-major
    /// (K*K values, upper triangle zero); K(K-1)/2 free values.
    CholeskyCorr(usize),
}

impl Constraint {
    /// Free dimension in unconstrained space for a single element of this
    /// constraint (`Real`/`Positive`/`UnitInterval` are per-scalar and get
    /// multiplied by the shape product by the caller).
    pub fn unconstrained_dim(&self) -> usize {
        match self {
            Constraint::Real | Constraint::Positive | Constraint::UnitInterval => 1,
            Constraint::Simplex(k) => k - 1,
            Constraint::CholeskyCorr(k) => k * (k - 1) / 2,
        }
    }

    /// Length of the constrained representation.
    pub fn constrained_dim(&self) -> usize {
        match self {
            Constraint::Real | Constraint::Positive | Constraint::UnitInterval => 1,
            Constraint::Simplex(k) => *k,
            Constraint::CholeskyCorr(k) => k * k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Constraint::Real => "real",
            Constraint::Positive => "positive",
            Constraint::UnitInterval => "unit_interval",
            Constraint::Simplex(_) => "simplex",
            Constraint::CholeskyCorr(_) => "cholesky_corr",
        }
    }

    /// Map unconstrained values `u` into constrained space, appending to
    /// `out`, and return the log-Jacobian log|det dx/du|. Generic over the
    /// scalar type so the same code runs on plain floats and on the tape.
    pub fn push_constrained<S: Scalar>(&self, u: &[S], out: &mut Vec<S>) -> S {
        match self {
            Constraint::Real => {
                out.push(u[0]);
                u[0].lit(0.0)
            }
            Constraint::Positive => {
                // x = e^u, log|dx/du| = u
                out.push(u[0].exp());
                u[0]
            }
            Constraint::UnitInterval => {
                // x = sigmoid(u), log|dx/du| = log x + log(1-x)
                let x = u[0].sigmoid();
                out.push(x);
                -(u[0].ln_1p_exp()) - (-u[0]).ln_1p_exp()
            }
            Constraint::Simplex(k) => {
                let k = *k;
                debug_assert_eq!(u.len(), k - 1);
                // Centered stick-breaking: the offset keeps u = 0 at the
                // uniform simplex.
                let one = u[0].lit(1.0);
                let mut stick = one;
                let mut log_j = u[0].lit(0.0);
                for (i, &ui) in u.iter().enumerate() {
                    let t = ui - ui.lit(((k - 1 - i) as f64).ln());
                    let z = t.sigmoid();
                    let x = stick * z;
                    out.push(x);
                    // log z + log(1-z) + log stick
                    log_j = log_j - t.ln_1p_exp() - (-t).ln_1p_exp() + stick.ln();
                    stick = stick - x;
                }
                out.push(stick);
                log_j
            }
            Constraint::CholeskyCorr(k) => {
                let k = *k;
                debug_assert_eq!(u.len(), k * (k - 1) / 2);
                let zero = if u.is_empty() {
                    panic!("cholesky_corr requires K >= 2")
                } else {
                    u[0].lit(0.0)
                };
                let one = u[0].lit(1.0);
                let mut l = vec![zero; k * k];
                let mut log_j = zero;
                let mut m = 0;
                l[0] = one;
                for i in 1..k {
                    // acc = 1 - sum of squares of the row so far.
                    let mut acc = one;
                    for j in 0..i {
                        let z = u[m].tanh();
                        m += 1;
                        let one_minus_z2 = one - z * z;
                        l[i * k + j] = z * acc.sqrt();
                        // d l_ij/d u_m contributes (1-z^2)*sqrt(acc).
                        log_j = log_j + one_minus_z2.ln() + acc.ln() * z.lit(0.5);
                        acc = acc * one_minus_z2;
                    }
                    l[i * k + i] = acc.sqrt();
                }
                out.extend_from_slice(&l);
                log_j
            }
        }
    }

    /// Inverse map: constrained value -> unconstrained vector, plus the
    /// log-Jacobian of the forward map evaluated there.
    pub fn to_unconstrained(&self, x: &[f64]) -> Result<(Vec<f64>, f64), Error> {
        let bad = |msg: &str| Error::Domain {
            param: self.name().to_string(),
            msg: msg.to_string(),
        };
        match self {
            Constraint::Real => Ok((vec![x[0]], 0.0)),
            Constraint::Positive => {
                if x[0] <= 0.0 {
                    return Err(bad("value must be > 0"));
                }
                let u = x[0].ln();
                Ok((vec![u], u))
            }
            Constraint::UnitInterval => {
                if !(0.0 < x[0] && x[0] < 1.0) {
                    return Err(bad("value must be in (0, 1)"));
                }
                let u = (x[0] / (1.0 - x[0])).ln();
                Ok((vec![u], x[0].ln() + (1.0 - x[0]).ln()))
            }
            Constraint::Simplex(k) => {
                let k = *k;
                if x.len() != k {
                    return Err(bad("wrong simplex length"));
                }
                if x.iter().any(|&v| v <= 0.0) || (x.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(bad("simplex entries must be positive and sum to 1"));
                }
                let mut stick = 1.0;
                let mut u = Vec::with_capacity(k - 1);
                let mut log_j = 0.0;
                for i in 0..k - 1 {
                    let z = x[i] / stick;
                    u.push((z / (1.0 - z)).ln() + ((k - 1 - i) as f64).ln());
                    log_j += z.ln() + (1.0 - z).ln() + stick.ln();
                    stick -= x[i];
                }
                Ok((u, log_j))
            }
            Constraint::CholeskyCorr(k) => {
                let k = *k;
                if x.len() != k * k {
                    return Err(bad("wrong factor length"));
                }
                for i in 0..k {
                    let row_norm: f64 = (0..=i).map(|j| x[i * k + j].powi(2)).sum();
                    if (row_norm - 1.0).abs() > 1e-9 {
                        return Err(bad("factor rows must have unit norm"));
                    }
                }
                let mut u = Vec::with_capacity(k * (k - 1) / 2);
                let mut log_j = 0.0;
                for i in 1..k {
                    let mut acc = 1.0f64;
                    for j in 0..i {
                        let z = x[i * k + j] / acc.sqrt();
                        u.push(0.5 * ((1.0 + z) / (1.0 - z)).ln()); // artanh
                        log_j += (1.0 - z * z).ln() + 0.5 * acc.ln();
                        acc *= 1.0 - z * z;
                    }
                }
                Ok((u, log_j))
            }
        }
    }

    /// Convenience wrapper around [`Self::push_constrained`] for plain floats.
    pub fn from_unconstrained(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let mut out = Vec::with_capacity(self.constrained_dim());
        let log_j = self.push_constrained(u, &mut out);
        (out, log_j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn positive_at_one() {
        let (u, log_j) = Constraint::Positive.to_unconstrained(&[1.0]).unwrap();
        assert_eq!(u, vec![0.0]);
        assert_eq!(log_j, 0.0);
        let (x, lj) = Constraint::Positive.from_unconstrained(&[0.0]);
        assert_eq!(x, vec![1.0]);
        assert_eq!(lj, 0.0);
    }

    #[test]
    fn unit_interval_at_half() {
        let (u, _) = Constraint::UnitInterval.to_unconstrained(&[0.5]).unwrap();
        assert!(u[0].abs() < 1e-15);
    }

    #[test]
    fn simplex_origin_is_uniform() {
        let (x, _) = Constraint::Simplex(3).from_unconstrained(&[0.0, 0.0]);
        for v in &x {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        let (u, _) = Constraint::Simplex(3)
            .to_unconstrained(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])
            .unwrap();
        assert!(u.iter().all(|v| v.abs() < 1e-12));
        let (x2, _) = Constraint::Simplex(2).from_unconstrained(&[0.0]);
        assert_eq!(x2, vec![0.5, 0.5]);
    }

    #[test]
    fn cholesky_corr_origin_is_identity() {
        let (l, _) = Constraint::CholeskyCorr(2).from_unconstrained(&[0.0]);
        assert_eq!(l, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let kinds = [
            Constraint::Real,
            Constraint::Positive,
            Constraint::UnitInterval,
            Constraint::Simplex(4),
            Constraint::CholeskyCorr(3),
        ];
        for kind in &kinds {
            for _ in 0..1000 {
                let u: Vec<f64> = (0..kind.unconstrained_dim())
                    .map(|_| rng.random_range(-3.0..3.0))
                    .collect();
                let (x, lj_fwd) = kind.from_unconstrained(&u);
                let (u2, lj_inv) = kind.to_unconstrained(&x).unwrap();
                for (a, b) in u.iter().zip(&u2) {
                    assert!((a - b).abs() < 1e-10, "{kind:?}: {a} vs {b}");
                }
                assert!((lj_fwd - lj_inv).abs() < 1e-8, "{kind:?} jacobian mismatch");
            }
        }
    }

    #[test]
    fn simplex_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let u: Vec<f64> = (0..5).map(|_| rng.random_range(-6.0..6.0)).collect();
            let (x, _) = Constraint::Simplex(6).from_unconstrained(&u);
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(x.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn cholesky_corr_rows_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = 4;
        for _ in 0..200 {
            let u: Vec<f64> = (0..k * (k - 1) / 2)
                .map(|_| rng.random_range(-3.0..3.0))
                .collect();
            let (l, _) = Constraint::CholeskyCorr(k).from_unconstrained(&u);
            for i in 0..k {
                let norm: f64 = (0..=i).map(|j| l[i * k + j].powi(2)).sum();
                assert!((norm - 1.0).abs() < 1e-12);
                for j in i + 1..k {
                    assert_eq!(l[i * k + j], 0.0);
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_difference_determinant() {
        // For the 1-D transforms, log|dx/du| vs central differences.
        for kind in [Constraint::Positive, Constraint::UnitInterval] {
            for &u in &[-1.3, 0.0, 0.7, 2.1] {
                let h = 1e-6;
                let (hi, _) = kind.from_unconstrained(&[u + h]);
                let (lo, _) = kind.from_unconstrained(&[u - h]);
                let fd = ((hi[0] - lo[0]) / (2.0 * h)).ln();
                let (_, lj) = kind.from_unconstrained(&[u]);
                assert!((lj - fd).abs() < 1e-6, "{kind:?} at {u}");
            }
        }
    }
}

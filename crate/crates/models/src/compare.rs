//! WAIC scoring from stored per-observation log-likelihood draws, and model
//! ranking with standard errors of pairwise differences.

use flaretk_inference::trace::Trace;
use flaretk_inference::Error;

#[derive(Debug, Clone)]
pub struct Waic {
    /// -2 lppd + 2 p_waic (deviance scale, lower is better).
    pub waic: f64,
    /// sqrt(n * variance of the pointwise contributions).
    pub se: f64,
    /// Effective parameter count: sum of per-observation variances of the
    /// log-likelihood over draws.
    pub p_waic: f64,
    /// Per-observation contribution: -2 (lppd_i - p_i). Sums to `waic`.
    pub pointwise: Vec<f64>,
}

fn log_mean_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + (xs.iter().map(|x| (x - m).exp()).sum::<f64>() / xs.len() as f64).ln()
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// WAIC from a draws-by-observations log-likelihood matrix.
pub fn waic_from_matrix(rows: &[Vec<f64>]) -> Result<Waic, Error> {
    if rows.len() < 2 {
        return Err(Error::Validation(
            "WAIC needs at least 2 posterior draws".into(),
        ));
    }
    let n_obs = rows[0].len();
    if n_obs == 0 || rows.iter().any(|r| r.len() != n_obs) {
        return Err(Error::Validation(
            "log-likelihood matrix must be rectangular and non-empty".into(),
        ));
    }
    let mut pointwise = Vec::with_capacity(n_obs);
    let mut p_waic = 0.0;
    for i in 0..n_obs {
        let col: Vec<f64> = rows
            .iter()
            .map(|r| r[i])
            .filter(|v| v.is_finite())
            .collect();
        if col.len() < 2 {
            return Err(Error::Validation(format!(
                "observation {i} has fewer than 2 finite log-likelihood draws"
            )));
        }
        let lppd_i = log_mean_exp(&col);
        let p_i = variance(&col);
        p_waic += p_i;
        pointwise.push(-2.0 * (lppd_i - p_i));
    }
    let waic: f64 = pointwise.iter().sum();
    let se = (n_obs as f64 * variance(&pointwise)).sqrt();
    Ok(Waic {
        waic,
        se,
        p_waic,
        pointwise,
    })
}

pub fn waic(trace: &Trace) -> Result<Waic, Error> {
    let rows = trace
        .log_lik_matrix()
        .ok_or_else(|| Error::Validation("trace stores no per-observation log-likelihood".into()))?;
    waic_from_matrix(&rows)
}

#[derive(Debug, Clone)]
pub struct ModelRank {
    /// Index into the input list.
    pub model: usize,
    pub waic: Waic,
    /// WAIC difference to the best (first-ranked) model; 0 for the best.
    pub delta_waic: f64,
    /// Pointwise standard error of that difference; 0 for the best.
    pub delta_se: f64,
}

/// Rank fits scored on the same observations by ascending WAIC. Differences
/// and their standard errors are computed pointwise against the best model.
pub fn compare_models(traces: &[&Trace]) -> Result<Vec<ModelRank>, Error> {
    if traces.is_empty() {
        return Err(Error::Validation("no models to compare".into()));
    }
    let scores: Vec<Waic> = traces.iter().map(|t| waic(t)).collect::<Result<_, _>>()?;
    let n_obs = scores[0].pointwise.len();
    if scores.iter().any(|s| s.pointwise.len() != n_obs) {
        return Err(Error::Validation(
            "models were scored on different observation counts".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].waic.total_cmp(&scores[b].waic));
    let best = order[0];
    let best_pw = scores[best].pointwise.clone();
    Ok(order
        .into_iter()
        .map(|m| {
            let s = scores[m].clone();
            let (delta_waic, delta_se) = if m == best {
                (0.0, 0.0)
            } else {
                let diffs: Vec<f64> = s
                    .pointwise
                    .iter()
                    .zip(&best_pw)
                    .map(|(a, b)| a - b)
                    .collect();
                let d: f64 = diffs.iter().sum();
                (d, (n_obs as f64 * variance(&diffs)).sqrt())
            };
            ModelRank {
                model: m,
                waic: s,
                delta_waic,
                delta_se,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_log_lik_has_zero_p_waic() {
        let rows = vec![vec![-1.5, -2.0, -0.5]; 200];
        let w = waic_from_matrix(&rows).unwrap();
        assert!(w.p_waic.abs() < 1e-12);
        assert!((w.waic - (-2.0 * (-4.0))).abs() < 1e-9, "{}", w.waic);
        assert!(w.se.is_finite());
    }

    #[test]
    fn duplicating_observations_doubles_waic() {
        let rows: Vec<Vec<f64>> = (0..150)
            .map(|d| {
                (0..5)
                    .map(|i| -1.0 - 0.01 * d as f64 - 0.3 * i as f64)
                    .collect()
            })
            .collect();
        let doubled: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().chain(r.iter()).copied().collect())
            .collect();
        let a = waic_from_matrix(&rows).unwrap();
        let b = waic_from_matrix(&doubled).unwrap();
        assert!((b.waic - 2.0 * a.waic).abs() < 1e-9);
        assert!((b.p_waic - 2.0 * a.p_waic).abs() < 1e-9);
    }

    #[test]
    fn non_rectangular_rejected() {
        assert!(waic_from_matrix(&[vec![-1.0, -2.0], vec![-1.0]]).is_err());
        assert!(waic_from_matrix(&[vec![-1.0]]).is_err());
    }

    #[test]
    fn non_finite_column_rejected() {
        let rows = vec![
            vec![-1.0, f64::NEG_INFINITY],
            vec![-1.1, f64::NEG_INFINITY],
            vec![-0.9, f64::NEG_INFINITY],
        ];
        assert!(waic_from_matrix(&rows).is_err());
    }
}

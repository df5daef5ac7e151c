//! Rank correlation, differencing, magnitude transforms, and kernel
//! density estimation for the exploratory analytics outputs.

use std::collections::BTreeMap;

use crate::month::MonthStamp;
use crate::CliError;

/// Average ranks (1-based); ties get the mean of the ranks they span.
fn mean_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // Positions i..=j share the value; mean of ranks i+1..=j+1.
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, CliError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CliError::validation(
            "correlation undefined for a constant series",
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation with mean ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, CliError> {
    if x.len() != y.len() {
        return Err(CliError::validation(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(CliError::validation(format!(
            "need at least 3 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CliError::validation("non-finite value in series"));
    }
    pearson(&mean_ranks(x), &mean_ranks(y))
}

/// Lag-1 differences; length n-1.
pub fn first_difference(s: &[f64]) -> Result<Vec<f64>, CliError> {
    if s.len() < 2 {
        return Err(CliError::validation(format!(
            "need at least 2 points to difference, got {}",
            s.len()
        )));
    }
    Ok(s.windows(2).map(|w| w[1] - w[0]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrMode {
    Levels,
    Lag1,
}

impl CorrMode {
    pub fn parse(s: &str) -> Result<CorrMode, CliError> {
        match s {
            "levels" => Ok(CorrMode::Levels),
            "lag1" => Ok(CorrMode::Lag1),
            _ => Err(CliError::validation(format!(
                "unknown correlation mode {s:?}, expected levels or lag1"
            ))),
        }
    }
}

/// Pairwise Spearman over aligned monthly series; strictly the lower
/// triangle without the diagonal, so n(n-1)/2 entries in input order.
pub fn correlation_matrix(
    series: &[(String, BTreeMap<MonthStamp, f64>)],
    mode: CorrMode,
) -> Result<Vec<(String, String, f64)>, CliError> {
    if series.len() < 2 {
        return Err(CliError::validation(format!(
            "need at least 2 series, got {}",
            series.len()
        )));
    }
    let months: Vec<MonthStamp> = series[0].1.keys().copied().collect();
    for (name, s) in &series[1..] {
        let missing: Vec<String> = months
            .iter()
            .filter(|m| !s.contains_key(m))
            .map(|m| m.to_string())
            .chain(
                s.keys()
                    .filter(|m| !series[0].1.contains_key(m))
                    .map(|m| m.to_string()),
            )
            .collect();
        if !missing.is_empty() {
            return Err(CliError::validation(format!(
                "series {name} is misaligned with {}; missing months: {}",
                series[0].0,
                missing.join(", ")
            )));
        }
    }
    let aligned: Vec<Vec<f64>> = series
        .iter()
        .map(|(_, s)| months.iter().map(|m| s[m]).collect())
        .collect();
    let mut out = Vec::new();
    for i in 1..series.len() {
        for j in 0..i {
            let (a, b) = match mode {
                CorrMode::Levels => (aligned[i].clone(), aligned[j].clone()),
                CorrMode::Lag1 => (first_difference(&aligned[i])?, first_difference(&aligned[j])?),
            };
            let rho = spearman(&a, &b).map_err(|e| {
                CliError::validation(format!("{} vs {}: {e}", series[i].0, series[j].0))
            })?;
            out.push((series[i].0.clone(), series[j].0.clone(), rho));
        }
    }
    Ok(out)
}

/// Drop exact zeros before the log transform; returns (kept, n_excluded).
pub fn exclude_zeros(volumes: &[f64]) -> (Vec<f64>, usize) {
    let kept: Vec<f64> = volumes.iter().copied().filter(|&v| v != 0.0).collect();
    let excluded = volumes.len() - kept.len();
    (kept, excluded)
}

/// Natural-log magnitudes of strictly positive volumes.
pub fn log_magnitude(volumes: &[f64]) -> Result<Vec<f64>, CliError> {
    volumes
        .iter()
        .map(|&v| {
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(CliError::validation(format!(
                    "log magnitude requires positive volumes, got {v}"
                )))
            }
        })
        .collect()
}

pub const KDE_GRID: usize = 512;

/// Gaussian kernel density on a 512-point grid over data +/- 3 bandwidths,
/// bandwidth h = sd * n^(-1/5).
pub fn kde(values: &[f64]) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let n = values.len();
    if n < 2 {
        return Err(CliError::validation(format!(
            "density estimate needs at least 2 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return Err(CliError::validation(
            "density estimate undefined for zero-variance sample",
        ));
    }
    kde_with_bandwidth(values, var.sqrt() * nf.powf(-0.2))
}

/// Density estimate at an explicit bandwidth.
pub fn kde_with_bandwidth(values: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let n = values.len();
    if n < 2 {
        return Err(CliError::validation(format!(
            "density estimate needs at least 2 points, got {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::validation("non-finite value in sample"));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(CliError::validation(format!("bandwidth must be positive, got {h}")));
    }
    let nf = n as f64;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (KDE_GRID - 1) as f64;
    let norm = 1.0 / (nf * h * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..KDE_GRID).map(|i| lo + step * i as f64).collect();
    let dens: Vec<f64> = grid
        .iter()
        .map(|&g| {
            norm * values
                .iter()
                .map(|&v| (-0.5 * ((g - v) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    Ok((grid, dens))
}

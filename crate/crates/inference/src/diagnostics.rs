//! Convergence diagnostics and posterior summaries: split R-hat, Geyer
//! effective sample size, intervals, and the summary table.

use crate::trace::Trace;

/// Split R-hat over [chain][draw] series: each chain is halved and the
/// between/within variance ratio computed over the split sequences.
/// Returns 1 by convention when every sequence is constant.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let mut seqs: Vec<&[f64]> = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        let half = c.len() / 2;
        seqs.push(&c[..half]);
        seqs.push(&c[half..half * 2]);
    }
    let n = seqs[0].len();
    if n < 2 {
        return f64::NAN;
    }
    let m = seqs.len() as f64;
    let means: Vec<f64> = seqs.iter().map(|s| mean(s)).collect();
    let vars: Vec<f64> = seqs.iter().map(|s| variance(s)).collect();
    let w = mean(&vars);
    if w == 0.0 {
        return 1.0;
    }
    let grand = mean(&means);
    let b = n as f64 / (m - 1.0) * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let var_hat = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    // Sampling noise can push the ratio a hair under 1; floor it there,
    // values below 1 carry no diagnostic meaning.
    (var_hat / w).sqrt().max(1.0)
}

/// Effective sample size via the Geyer initial monotone sequence over
/// chain-averaged autocorrelations, capped at 1.5x the total draw count.
pub fn ess(chains: &[Vec<f64>]) -> f64 {
    let c = chains.len();
    let n = chains.iter().map(|ch| ch.len()).min().unwrap_or(0);
    let total = (c * n) as f64;
    if n < 4 {
        return total;
    }
    let means: Vec<f64> = chains.iter().map(|ch| mean(&ch[..n])).collect();
    let vars: Vec<f64> = chains.iter().map(|ch| variance(&ch[..n])).collect();
    let w = mean(&vars);
    let grand = mean(&means);
    let b_over_n = if c > 1 {
        means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (c as f64 - 1.0)
    } else {
        0.0
    };
    let var_hat = (n as f64 - 1.0) / n as f64 * w + b_over_n;
    if var_hat == 0.0 {
        return total;
    }

    // Chain-mean biased autocovariances, averaged over chains.
    let acov = |t: usize| -> f64 {
        let mut s = 0.0;
        for (ch, mu) in chains.iter().zip(&means) {
            let mut a = 0.0;
            for i in 0..n - t {
                a += (ch[i] - mu) * (ch[i + t] - mu);
            }
            s += a / n as f64;
        }
        s / c as f64
    };

    let rho = |t: usize| 1.0 - (w - acov(t)) / var_hat;
    let mut tau = 0.0; // running -1 + 2 * sum of monotone positive pairs
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    let mut sum_pairs = 0.0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair); // initial monotone sequence
        prev_pair = pair;
        sum_pairs += pair;
        t += 2;
    }
    tau += -1.0 + 2.0 * sum_pairs;
    // Inflation cap: never report more than 1.5x the total draw count.
    (total / tau.max(1e-12)).min(1.5 * total)
}

/// Highest-density interval: the shortest window covering ceil(prob * n)
/// sorted draws.
pub fn hdi(draws: &[f64], prob: f64) -> (f64, f64) {
    assert!(!draws.is_empty());
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let m = ((prob * n as f64).ceil() as usize).clamp(1, n);
    let mut best = (sorted[0], sorted[m - 1]);
    for i in 1..=n - m {
        if sorted[i + m - 1] - sorted[i] < best.1 - best.0 {
            best = (sorted[i], sorted[i + m - 1]);
        }
    }
    best
}

/// Equal-tailed interval on a sorted slice, using order statistics chosen so
/// the interval always covers at least ceil(prob * n) draws; this keeps the
/// HDI-never-wider invariant exact on every sample set.
pub fn ci_bounds(sorted: &[f64], prob: f64) -> (f64, f64) {
    let n = sorted.len();
    let alpha = (1.0 - prob) / 2.0;
    let lo = ((alpha * n as f64).floor() as usize).min(n - 1);
    let hi = (((1.0 - alpha) * n as f64).ceil() as usize).clamp(1, n) - 1;
    (sorted[lo], sorted[hi.max(lo)])
}

/// Linear-interpolation quantile on a sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Per-parameter posterior summary row.
#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub param: String,
    pub mean: f64,
    pub sd: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub hdi_lo: f64,
    pub hdi_hi: f64,
    pub q25: f64,
    pub q75: f64,
    pub rhat: f64,
    pub ess: f64,
}

/// Split R-hat of one flat scalar parameter.
pub fn rhat(trace: &Trace, param: &str) -> f64 {
    let series = trace
        .scalar_series(param)
        .unwrap_or_else(|| panic!("unknown parameter {param}"));
    split_rhat(&series)
}

/// Effective sample size of one flat scalar parameter.
pub fn ess_param(trace: &Trace, param: &str) -> f64 {
    let series = trace
        .scalar_series(param)
        .unwrap_or_else(|| panic!("unknown parameter {param}"));
    ess(&series)
}

/// Summaries for every flat scalar parameter at the given interval mass.
pub fn summarize(trace: &Trace, prob: f64) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for name in trace.flat_names() {
        let series = trace.scalar_series(&name).unwrap();
        let all: Vec<f64> = series.iter().flatten().copied().collect();
        let mut sorted = all.clone();
        sorted.sort_by(f64::total_cmp);
        let mu = mean(&all);
        let sd = if all.len() > 1 { variance(&all).sqrt() } else { 0.0 };
        let (ci_lo, ci_hi) = ci_bounds(&sorted, prob);
        let (hdi_lo, hdi_hi) = hdi(&all, prob);
        rows.push(SummaryRow {
            param: name,
            mean: mu,
            sd,
            ci_lo,
            ci_hi,
            hdi_lo,
            hdi_hi,
            q25: quantile_sorted(&sorted, 0.25),
            q75: quantile_sorted(&sorted, 0.75),
            rhat: split_rhat(&series),
            ess: ess(&series),
        });
    }
    rows
}

/// Summary table CSV with the fixed column set.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("param,mean,sd,ci_lo,ci_hi,hdi_lo,hdi_hi,rhat,ess\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.param, r.mean, r.sd, r.ci_lo, r.ci_hi, r.hdi_lo, r.hdi_hi, r.rhat, r.ess
        ));
    }
    out
}

//! Gaussian mixture model over log flare magnitudes with the component
//! assignment marginalized out, per-draw label ordering, and Bayes-rule
//! responsibilities.

use std::ops::RangeInclusive;

use flaretk_inference::dist::density;
use flaretk_inference::nuts::{nuts_sample, SamplerConfig};
use flaretk_inference::program::{DensityParts, ParamSpec, Program};
use flaretk_inference::tape::log_sum_exp;
use flaretk_inference::trace::Trace;
use flaretk_inference::transform::Constraint;
use flaretk_inference::Error;

/// Default Dirichlet concentration on the weights: alpha = 6 for every
/// component.
pub const DEFAULT_CONCENTRATION: f64 = 6.0;
/// Component counts accepted by default; up to seven are worth trying and
/// one gives the single-Gaussian baseline.
pub const DEFAULT_K_RANGE: RangeInclusive<usize> = 1..=7;

/// Posterior mixture summary. Components are ordered by mean; weights,
/// means, and sds are posterior means after per-draw reordering.
#[derive(Debug, Clone)]
pub struct MixtureFit {
    pub k: usize,
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub trace: Trace,
}

/// Evenly spaced component-mean anchors between the data extremes.
fn mean_anchors(xs: &[f64], k: usize) -> Vec<f64> {
    let l1 = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let l2 = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if k == 1 {
        return vec![0.5 * (l1 + l2)];
    }
    (0..k)
        .map(|j| l1 + j as f64 * (l2 - l1) / (k - 1) as f64)
        .collect()
}

/// Marginalized mixture program: weights ~ Dirichlet(concentration * 1_K),
/// mu_j ~ Normal(anchor_j, 2), sigma_j ~ HalfNormal(2), and each
/// observation's likelihood is the log-sum-exp over components.
pub fn gmm_program(xs: &[f64], k: usize, concentration: f64) -> Program {
    let xs = xs.to_vec();
    let anchors = mean_anchors(&xs, k);
    let mut params = Vec::new();
    if k >= 2 {
        params.push(ParamSpec::simplex("weights", k));
    }
    params.push(ParamSpec::vector("means", k, Constraint::Real));
    params.push(ParamSpec::vector("sds", k, Constraint::Positive));
    let alpha = vec![concentration; k];
    Program::new(params, move |tape, view| {
        let means = view.get("means");
        let sds = view.get("sds");
        let mut lp = tape.constant(0.0);
        let log_w: Vec<_> = if k >= 2 {
            let w = view.get("weights");
            lp = lp + density::dirichlet(w, &alpha);
            w.iter().map(|wi| wi.ln()).collect()
        } else {
            vec![tape.constant(0.0)]
        };
        for j in 0..k {
            lp = lp
                + density::normal(means[j], means[j].lit(anchors[j]), means[j].lit(2.0))
                + density::half_normal(sds[j], sds[j].lit(2.0));
        }
        let mut log_lik = Vec::with_capacity(xs.len());
        for &x in &xs {
            let terms: Vec<_> = (0..k)
                .map(|j| log_w[j] + density::normal(means[j].lit(x), means[j], sds[j]))
                .collect();
            let ll = log_sum_exp(&terms);
            lp = lp + ll;
            log_lik.push(ll);
        }
        DensityParts {
            log_density: lp,
            log_lik: Some(log_lik),
        }
    })
}

pub fn fit_gmm(xs: &[f64], k: usize, cfg: &SamplerConfig) -> Result<MixtureFit, Error> {
    fit_gmm_with(xs, k, DEFAULT_CONCENTRATION, DEFAULT_K_RANGE, cfg)
}

pub fn fit_gmm_with(
    xs: &[f64],
    k: usize,
    concentration: f64,
    k_range: RangeInclusive<usize>,
    cfg: &SamplerConfig,
) -> Result<MixtureFit, Error> {
    if !k_range.contains(&k) {
        return Err(Error::Validation(format!(
            "component count {k} outside accepted range {:?}",
            k_range
        )));
    }
    if xs.len() <= k {
        return Err(Error::Validation(format!(
            "need more observations ({}) than components ({k})",
            xs.len()
        )));
    }
    let mut trace = nuts_sample(&gmm_program(xs, k, concentration), cfg)?;
    order_components_by_mean(&mut trace, k);
    let (weights, means, sds) = posterior_component_means(&trace, k);
    Ok(MixtureFit {
        k,
        weights,
        means,
        sds,
        trace,
    })
}

/// Per-draw label alignment: sort components by their mean within every
/// draw, permuting weights and sds identically. Removes label switching
/// from summaries without touching the (permutation-invariant) density.
fn order_components_by_mean(trace: &mut Trace, k: usize) {
    let p_means = trace.params.iter().position(|p| p.name == "means").unwrap();
    let p_sds = trace.params.iter().position(|p| p.name == "sds").unwrap();
    let p_w = trace.params.iter().position(|p| p.name == "weights");
    for ch in 0..trace.chains {
        for dr in 0..trace.draws {
            let mut order: Vec<usize> = (0..k).collect();
            let means = trace.samples[p_means][ch][dr].clone();
            order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));
            let permute = |v: &mut Vec<f64>| {
                let old = v.clone();
                for (dst, &src) in order.iter().enumerate() {
                    v[dst] = old[src];
                }
            };
            permute(&mut trace.samples[p_means][ch][dr]);
            permute(&mut trace.samples[p_sds][ch][dr]);
            if let Some(pw) = p_w {
                permute(&mut trace.samples[pw][ch][dr]);
            }
        }
    }
}

fn posterior_component_means(trace: &Trace, k: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let total = (trace.chains * trace.draws) as f64;
    let avg = |name: &str| -> Vec<f64> {
        let p = trace.params.iter().position(|p| p.name == name);
        let Some(p) = p else {
            return vec![1.0];
        };
        let mut acc = vec![0.0; k];
        for ch in &trace.samples[p] {
            for draw in ch {
                for (a, &v) in acc.iter_mut().zip(draw) {
                    *a += v;
                }
            }
        }
        acc.iter().map(|a| a / total).collect()
    };
    (avg("weights"), avg("means"), avg("sds"))
}

/// Marginal log-likelihood of one observation under fixed parameters.
pub fn gmm_marginal_loglik(x: f64, weights: &[f64], means: &[f64], sds: &[f64]) -> f64 {
    let terms: Vec<f64> = (0..weights.len())
        .map(|j| weights[j].ln() + density::normal(x, means[j], sds[j]))
        .collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// The same quantity by brute-force enumeration of the latent assignment:
/// p(x) = sum_z p(z) p(x | z), summed in linear space.
pub fn gmm_latent_enumeration_loglik(x: f64, weights: &[f64], means: &[f64], sds: &[f64]) -> f64 {
    let p: f64 = (0..weights.len())
        .map(|z| weights[z] * density::normal(x, means[z], sds[z]).exp())
        .sum();
    p.ln()
}

/// Posterior component probabilities for one magnitude under the
/// posterior-mean parameters; sums to 1.
pub fn responsibilities(fit: &MixtureFit, x: f64) -> Vec<f64> {
    let joint: Vec<f64> = (0..fit.k)
        .map(|j| fit.weights[j].ln() + density::normal(x, fit.means[j], fit.sds[j]))
        .collect();
    let m = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let un: Vec<f64> = joint.iter().map(|t| (t - m).exp()).collect();
    let z: f64 = un.iter().sum();
    un.iter().map(|u| u / z).collect()
}

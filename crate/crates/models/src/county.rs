//! Hierarchical county-level calibration: per-county intercepts and slopes
//! drawn from a bivariate normal population with an LKJ-distributed
//! correlation, in centered, noncentered, or mixed per-county form.

use flaretk_inference::dist::density;
use flaretk_inference::nuts::{nuts_sample, SamplerConfig};
use flaretk_inference::program::{DensityParts, ParamSpec, Program};
use flaretk_inference::trace::Trace;
use flaretk_inference::transform::Constraint;
use flaretk_inference::Error;

use crate::data::CountyMonthly;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// How each county's (intercept, slope) pair is expressed to the sampler.
/// The posterior is identical; the geometry the sampler sees is not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parameterization {
    Centered,
    Noncentered,
    /// Per-county flag, true = noncentered for that county.
    Mixed(Vec<bool>),
}

impl Parameterization {
    pub fn noncentered_flags(&self, n_counties: usize) -> Result<Vec<bool>, Error> {
        match self {
            Parameterization::Centered => Ok(vec![false; n_counties]),
            Parameterization::Noncentered => Ok(vec![true; n_counties]),
            Parameterization::Mixed(flags) => {
                if flags.len() != n_counties {
                    return Err(Error::Validation(format!(
                        "mixed parameterization has {} flags for {n_counties} counties",
                        flags.len()
                    )));
                }
                Ok(flags.clone())
            }
        }
    }
}

/// Population: mu_alpha ~ HalfNormal(0.1), mu_beta ~ Gamma(2, 2),
/// sd_alpha, sd_beta ~ HalfNormal(0.1), correlation factor ~ LKJ(2),
/// observation noise sigma ~ HalfNormal(0.05). County pairs are bivariate
/// normal around (mu_alpha, mu_beta) with covariance D L L' D.
pub fn county_program(
    data: &[CountyMonthly],
    n_counties: usize,
    flags: Vec<bool>,
) -> Program {
    let data = data.to_vec();
    Program::new(
        vec![
            ParamSpec::scalar("mu_alpha", Constraint::Positive),
            ParamSpec::scalar("mu_beta", Constraint::Positive),
            ParamSpec::scalar("sd_alpha", Constraint::Positive),
            ParamSpec::scalar("sd_beta", Constraint::Positive),
            ParamSpec::scalar("sigma", Constraint::Positive),
            ParamSpec::cholesky_corr("corr", 2),
            ParamSpec::vector("raw", 2 * n_counties, Constraint::Real),
        ],
        move |_tape, view| {
            let mu_a = view.get("mu_alpha")[0];
            let mu_b = view.get("mu_beta")[0];
            let sd_a = view.get("sd_alpha")[0];
            let sd_b = view.get("sd_beta")[0];
            let sigma = view.get("sigma")[0];
            let corr = view.get("corr");
            let raw = view.get("raw");
            // Row-major 2x2 lower factor: corr = [1, 0, l10, l11].
            let (l10, l11) = (corr[2], corr[3]);

            let mut lp = density::half_normal(mu_a, mu_a.lit(0.1))
                + density::gamma(mu_b, mu_b.lit(2.0), mu_b.lit(2.0))
                + density::half_normal(sd_a, sd_a.lit(0.1))
                + density::half_normal(sd_b, sd_b.lit(0.1))
                + density::half_normal(sigma, sigma.lit(0.05))
                + density::lkj_cholesky(corr, 2, 2.0);

            let mut alpha = Vec::with_capacity(flags.len());
            let mut beta = Vec::with_capacity(flags.len());
            for (c, &nc) in flags.iter().enumerate() {
                let (r0, r1) = (raw[2 * c], raw[2 * c + 1]);
                if nc {
                    // raw is whitened: x = mu + D L z.
                    let zero = r0.lit(0.0);
                    let one = r0.lit(1.0);
                    lp = lp + density::normal(r0, zero, one) + density::normal(r1, zero, one);
                    alpha.push(mu_a + sd_a * r0);
                    beta.push(mu_b + sd_b * (l10 * r0 + l11 * r1));
                } else {
                    // raw is the pair itself: solve (D L) y = x - mu.
                    let y0 = (r0 - mu_a) / sd_a;
                    let y1 = ((r1 - mu_b) / sd_b - l10 * y0) / l11;
                    lp = lp - sd_a.ln() - (sd_b * l11).ln()
                        - (y0 * y0 + y1 * y1) / 2.0
                        - r0.lit(LN_2PI);
                    alpha.push(r0);
                    beta.push(r1);
                }
            }

            let mut log_lik = Vec::with_capacity(data.len());
            for d in &data {
                let mu = alpha[d.county] + beta[d.county] * d.viirs_bcm;
                let ll = density::normal(mu.lit(d.ndic_bcm), mu, sigma);
                lp = lp + ll;
                log_lik.push(ll);
            }
            DensityParts {
                log_density: lp,
                log_lik: Some(log_lik),
            }
        },
    )
}

pub fn fit_county_hierarchical(
    data: &[CountyMonthly],
    parameterization: &Parameterization,
    cfg: &SamplerConfig,
) -> Result<Trace, Error> {
    if data.is_empty() {
        return Err(Error::Validation("no county observations".into()));
    }
    let n_counties = data.iter().map(|d| d.county).max().unwrap() + 1;
    if n_counties < 2 {
        return Err(Error::Validation(
            "hierarchical fit needs at least 2 counties".into(),
        ));
    }
    if data.iter().any(|d| d.viirs_bcm < 0.0 || d.ndic_bcm < 0.0) {
        return Err(Error::Validation("volumes must be nonnegative".into()));
    }
    let flags = parameterization.noncentered_flags(n_counties)?;
    nuts_sample(&county_program(data, n_counties, flags), cfg)
}

fn block<'a>(trace: &'a Trace, name: &str) -> Result<&'a Vec<Vec<Vec<f64>>>, Error> {
    let i = trace
        .params
        .iter()
        .position(|p| p.name == name)
        .ok_or_else(|| Error::Validation(format!("trace has no parameter {name}")))?;
    Ok(&trace.samples[i])
}

/// Per-county intercepts and slopes for every draw, flattened over chains:
/// `(alpha, beta)` with shape `[chains * draws][county]`. Noncentered
/// counties are reconstructed through the population draw of the same
/// iteration.
pub fn county_effects(
    trace: &Trace,
    parameterization: &Parameterization,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), Error> {
    let raw = block(trace, "raw")?;
    let n_counties = raw[0][0].len() / 2;
    let flags = parameterization.noncentered_flags(n_counties)?;
    let mu_a = block(trace, "mu_alpha")?;
    let mu_b = block(trace, "mu_beta")?;
    let sd_a = block(trace, "sd_alpha")?;
    let sd_b = block(trace, "sd_beta")?;
    let corr = block(trace, "corr")?;
    let mut alpha = Vec::with_capacity(trace.chains * trace.draws);
    let mut beta = Vec::with_capacity(trace.chains * trace.draws);
    for ch in 0..trace.chains {
        for dr in 0..trace.draws {
            let r = &raw[ch][dr];
            let l = &corr[ch][dr];
            let (ma, mb) = (mu_a[ch][dr][0], mu_b[ch][dr][0]);
            let (sa, sb) = (sd_a[ch][dr][0], sd_b[ch][dr][0]);
            let mut a_row = Vec::with_capacity(n_counties);
            let mut b_row = Vec::with_capacity(n_counties);
            for (c, &nc) in flags.iter().enumerate() {
                let (r0, r1) = (r[2 * c], r[2 * c + 1]);
                if nc {
                    a_row.push(ma + sa * r0);
                    b_row.push(mb + sb * (l[2] * r0 + l[3] * r1));
                } else {
                    a_row.push(r0);
                    b_row.push(r1);
                }
            }
            alpha.push(a_row);
            beta.push(b_row);
        }
    }
    Ok((alpha, beta))
}

/// Population correlation of intercept and slope per draw, flattened over
/// chains: rho = L[1,0] of the correlation factor.
pub fn population_correlation(trace: &Trace) -> Result<Vec<f64>, Error> {
    let corr = block(trace, "corr")?;
    let mut out = Vec::with_capacity(trace.chains * trace.draws);
    for ch in corr {
        for l in ch {
            out.push(l[2]);
        }
    }
    Ok(out)
}

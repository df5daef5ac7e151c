//! Negative binomial model for per-oilfield detection counts:
//! C_i ~ NegBinomial(mu, phi) with mu ~ Gamma(2, 1), phi ~ Exponential(1).

use flaretk_inference::dist::density;
use flaretk_inference::nuts::{nuts_sample, SamplerConfig};
use flaretk_inference::program::{DensityParts, ParamSpec, Program};
use flaretk_inference::trace::Trace;
use flaretk_inference::transform::Constraint;
use flaretk_inference::Error;

pub fn negbin_program(counts: &[u64]) -> Program {
    let counts = counts.to_vec();
    Program::new(
        vec![
            ParamSpec::scalar("mu", Constraint::Positive),
            ParamSpec::scalar("phi", Constraint::Positive),
        ],
        move |_tape, view| {
            let mu = view.get("mu")[0];
            let phi = view.get("phi")[0];
            let mut lp = density::gamma(mu, mu.lit(2.0), mu.lit(1.0))
                + density::exponential(phi, phi.lit(1.0));
            let mut log_lik = Vec::with_capacity(counts.len());
            for &c in &counts {
                let ll = density::neg_binomial(c as f64, mu, phi);
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

pub fn fit_negbin_counts(counts: &[u64], cfg: &SamplerConfig) -> Result<Trace, Error> {
    if counts.len() < 10 {
        return Err(Error::Validation(format!(
            "count fit needs at least 10 observations, got {}",
            counts.len()
        )));
    }
    nuts_sample(&negbin_program(counts), cfg)
}

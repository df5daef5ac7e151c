//! State-level linear calibration of reported flaring against satellite
//! volumes: NDIC_i ~ Normal(alpha + beta * VIIRS_i, sigma).

use flaretk_inference::dist::density;
use flaretk_inference::nuts::{nuts_sample, SamplerConfig};
use flaretk_inference::program::{DensityParts, ParamSpec, Program};
use flaretk_inference::trace::Trace;
use flaretk_inference::transform::Constraint;
use flaretk_inference::Error;

use crate::data::StateMonthly;

/// Fit output plus data-quality warnings discovered before sampling.
pub struct StateFit {
    pub trace: Trace,
    /// Set when all satellite volumes are identical: the slope carries no
    /// information and the posterior just echoes its prior.
    pub slope_unidentified: bool,
}

/// Intercept alpha ~ HalfNormal(0.2), slope beta ~ Gamma(2, 2) (prior mean
/// 1), noise sigma ~ HalfCauchy(0.1). An empty dataset is a prior-only fit;
/// otherwise at least 3 months are required.
pub fn state_linear_program(data: &[StateMonthly]) -> Program {
    let data = data.to_vec();
    Program::new(
        vec![
            ParamSpec::scalar("alpha", Constraint::Positive),
            ParamSpec::scalar("beta", Constraint::Positive),
            ParamSpec::scalar("sigma", Constraint::Positive),
        ],
        move |_tape, view| {
            let alpha = view.get("alpha")[0];
            let beta = view.get("beta")[0];
            let sigma = view.get("sigma")[0];
            let mut lp = density::half_normal(alpha, alpha.lit(0.2))
                + density::gamma(beta, beta.lit(2.0), beta.lit(2.0))
                + density::half_cauchy(sigma, sigma.lit(0.1));
            let mut log_lik = Vec::with_capacity(data.len());
            for d in &data {
                let mu = alpha + beta * d.viirs_bcm;
                let ll = density::normal(mu.lit(d.ndic_bcm), mu, sigma);
                lp = lp + ll;
                log_lik.push(ll);
            }
            DensityParts {
                log_density: lp,
                log_lik: if log_lik.is_empty() { None } else { Some(log_lik) },
            }
        },
    )
}

pub fn fit_state_linear(data: &[StateMonthly], cfg: &SamplerConfig) -> Result<StateFit, Error> {
    if !data.is_empty() && data.len() < 3 {
        return Err(Error::Validation(format!(
            "state fit needs at least 3 months (or none for a prior-only fit), got {}",
            data.len()
        )));
    }
    let slope_unidentified = !data.is_empty()
        && data.iter().all(|d| d.viirs_bcm == data[0].viirs_bcm);
    let trace = nuts_sample(&state_linear_program(data), cfg)?;
    Ok(StateFit {
        trace,
        slope_unidentified,
    })
}

/// Plug-in point prediction at one satellite volume.
pub fn state_point_prediction(alpha: f64, beta: f64, viirs_bcm: f64) -> f64 {
    alpha + beta * viirs_bcm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_prediction_is_the_line() {
        assert_eq!(state_point_prediction(0.061, 0.535, 0.0), 0.061);
        assert!((state_point_prediction(0.061, 0.535, 1.0) - 0.596).abs() < 1e-12);
    }

    #[test]
    fn too_few_months_rejected() {
        let data = vec![StateMonthly::new(0, 0.1, 0.2).unwrap(); 2];
        assert!(fit_state_linear(&data, &SamplerConfig::default()).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data: Vec<StateMonthly> = (0..10)
            .map(|i| {
                let v = 0.1 + 0.03 * i as f64;
                StateMonthly::new(i, v, 0.06 + 0.5 * v).unwrap()
            })
            .collect();
        let prog = state_linear_program(&data);
        let u = [0.3, -0.4, -1.1];
        let e = prog.eval(&u).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut up = u;
            let mut dn = u;
            up[i] += h;
            dn[i] -= h;
            let fd = (prog.eval(&up).unwrap().value - prog.eval(&dn).unwrap().value) / (2.0 * h);
            assert!((e.grad[i] - fd).abs() < 1e-5, "{i}: {} vs {fd}", e.grad[i]);
        }
    }

    #[test]
    fn constant_viirs_sets_warning_flag() {
        let data = vec![StateMonthly::new(0, 0.2, 0.15).unwrap(); 6];
        let cfg = SamplerConfig {
            chains: 2,
            warmup_iters: 150,
            draw_iters: 100,
            ..Default::default()
        };
        let fit = fit_state_linear(&data, &cfg).unwrap();
        assert!(fit.slope_unidentified);
        assert_eq!(fit.trace.chains, 2);
    }
}

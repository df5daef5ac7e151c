//! Latent-GP monthly time-series models: a whitened latent function with a
//! Matern (or Matern + periodic) kernel pushed through a kind-specific link
//! and likelihood, plus latent reconstruction and forecasting.

use flaretk_inference::dist::{density, Dist};
use flaretk_inference::gp::{
    gp_condition, latent_gp_vars, latent_noncentered, Hyper, KernelExpr,
};
use flaretk_inference::linalg::{cholesky, matvec_lower, Mat};
use flaretk_inference::nuts::{nuts_sample, SamplerConfig};
use flaretk_inference::program::{DensityParts, ParamSpec, Program};
use flaretk_inference::trace::Trace;
use flaretk_inference::transform::Constraint;
use flaretk_inference::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::EntitySeries;

/// Barrels-of-oil-equivalent conversion: 6 mcf of gas per boe.
pub const MCF_PER_BOE: f64 = 6.0;
const JITTER: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpKind {
    /// Flared share of gas production; Student-t residual on flared volume.
    GasProportion,
    /// Share of active wells that flare; binomial counts.
    WellProportion,
    /// Detection counts as a log-Gaussian Cox process; Poisson.
    DetectionCount,
    /// Flared share of oil production in boe; Student-t residual.
    BoeProportion,
    /// Multiplicative factor between satellite and reported volumes;
    /// trend + seasonal kernel, Student-t residual.
    ScaleFactor,
}

impl GpKind {
    pub fn name(&self) -> &'static str {
        match self {
            GpKind::GasProportion => "gas_proportion",
            GpKind::WellProportion => "well_proportion",
            GpKind::DetectionCount => "detection_count",
            GpKind::BoeProportion => "boe_proportion",
            GpKind::ScaleFactor => "scale_factor",
        }
    }

    pub fn parse(s: &str) -> Result<GpKind, Error> {
        match s {
            "gas_proportion" => Ok(GpKind::GasProportion),
            "well_proportion" => Ok(GpKind::WellProportion),
            "detection_count" => Ok(GpKind::DetectionCount),
            "boe_proportion" => Ok(GpKind::BoeProportion),
            "scale_factor" => Ok(GpKind::ScaleFactor),
            _ => Err(Error::Validation(format!("unknown series model kind {s}"))),
        }
    }

    /// Link from the latent function to the per-month quantity:
    /// inverse logit for proportions, exp for rates and scale factors.
    /// Outputs are clamped into the open range so extreme latents cannot
    /// saturate to exactly 0 or 1 in floating point.
    pub fn link(&self, f: f64) -> f64 {
        match self {
            GpKind::GasProportion | GpKind::WellProportion | GpKind::BoeProportion => (1.0
                / (1.0 + (-f).exp()))
            .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0),
            GpKind::DetectionCount | GpKind::ScaleFactor => {
                f.exp().max(f64::MIN_POSITIVE)
            }
        }
    }
}

/// Gas capture share implied by a flaring proportion.
pub fn gas_capture_from_proportion(pi: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&pi));
    1.0 - pi
}

/// Kernel shared by fitting, reconstruction, and forecasting. Hyperparameter
/// slots are filled per draw.
pub fn kernel_for(kind: GpKind) -> KernelExpr {
    match kind {
        GpKind::ScaleFactor => KernelExpr::sum(
            KernelExpr::sum(
                KernelExpr::Matern52 {
                    len: Hyper::Slot(0),
                    eta: Hyper::Slot(1),
                },
                KernelExpr::Periodic {
                    period: Hyper::Slot(2),
                    len: Hyper::Slot(3),
                    eta: Hyper::Slot(4),
                },
            ),
            KernelExpr::WhiteNoise {
                delta: Hyper::Fixed(1e-6),
            },
        ),
        _ => KernelExpr::Matern52 {
            len: Hyper::Slot(0),
            eta: Hyper::Slot(1),
        },
    }
}

/// Kernel hyperparameter names in slot order.
pub fn hyper_names(kind: GpKind) -> &'static [&'static str] {
    match kind {
        GpKind::ScaleFactor => &["len_trend", "amp_trend", "period", "len_seasonal", "amp_seasonal"],
        _ => &["len_scale", "amplitude"],
    }
}

fn required<T: Clone>(field: &Option<Vec<T>>, name: &str, kind: GpKind) -> Result<Vec<T>, Error> {
    field.clone().ok_or_else(|| {
        Error::Validation(format!(
            "series model {} requires field {name}",
            kind.name()
        ))
    })
}

/// Build the log-density program for one series and kind. `negbin_counts`
/// swaps the Poisson detection likelihood for a negative binomial with an
/// extra dispersion parameter phi ~ Exponential(1).
pub fn gp_program(
    series: &EntitySeries,
    kind: GpKind,
    negbin_counts: bool,
) -> Result<Program, Error> {
    series.validate()?;
    if series.len() < 3 {
        return Err(Error::Validation("series needs at least 3 months".into()));
    }
    if negbin_counts && kind != GpKind::DetectionCount {
        return Err(Error::Validation(
            "negative binomial swap only applies to detection_count".into(),
        ));
    }
    let xs = series.months.clone();
    let n = xs.len();
    let kernel = kernel_for(kind);

    // Kernel hyperparameter blocks with their priors.
    let mut params: Vec<ParamSpec> = hyper_names(kind)
        .iter()
        .map(|name| ParamSpec::scalar(name, Constraint::Positive))
        .collect();
    let extra: &[&str] = match (kind, negbin_counts) {
        (GpKind::GasProportion | GpKind::BoeProportion | GpKind::ScaleFactor, _) => {
            &["nu", "resid_var"]
        }
        (GpKind::DetectionCount, true) => &["phi"],
        _ => &[],
    };
    for name in extra {
        params.push(ParamSpec::scalar(name, Constraint::Positive));
    }
    params.push(ParamSpec::vector("white", n, Constraint::Real));

    // Per-kind observation payloads, cloned into the closure.
    let obs: GpObs = match kind {
        GpKind::GasProportion => GpObs::Scaled {
            y: required(&series.flared, "flared", kind)?,
            scale: required(&series.gas_prod, "gas_prod", kind)?,
        },
        GpKind::BoeProportion => GpObs::Scaled {
            y: required(&series.flared, "flared", kind)?
                .iter()
                .map(|f| f / MCF_PER_BOE)
                .collect(),
            scale: required(&series.oil_prod, "oil_prod", kind)?,
        },
        GpKind::ScaleFactor => GpObs::Scaled {
            y: required(&series.ndic, "ndic", kind)?,
            scale: required(&series.viirs, "viirs", kind)?,
        },
        GpKind::WellProportion => GpObs::Binomial {
            k: required(&series.flaring_wells, "flaring_wells", kind)?,
            n_trials: required(&series.active_wells, "active_wells", kind)?,
        },
        GpKind::DetectionCount => GpObs::Counts {
            c: required(&series.detection_count, "detection_count", kind)?,
            negbin: negbin_counts,
        },
    };

    Ok(Program::new(params, move |tape, view| {
        let slot_vars: Vec<_> = hyper_names(kind).iter().map(|n| view.get(n)[0]).collect();
        let white = view.get("white");
        let anchor = slot_vars[0];

        let mut lp = match kind {
            GpKind::ScaleFactor => {
                let (lt, at) = (slot_vars[0], slot_vars[1]);
                let (t, ls, asn) = (slot_vars[2], slot_vars[3], slot_vars[4]);
                density::gamma(lt, lt.lit(8.0), lt.lit(2.0))
                    + density::half_cauchy(at, at.lit(5.0))
                    + density::normal(t, t.lit(12.0), t.lit(1.0))
                    + density::gamma(ls, ls.lit(4.0), ls.lit(3.0))
                    + density::half_cauchy(asn, asn.lit(5.0))
            }
            _ => {
                let (l, e) = (slot_vars[0], slot_vars[1]);
                density::gamma(l, l.lit(2.0), l.lit(1.0)) + density::half_cauchy(e, e.lit(5.0))
            }
        };
        for &z in white {
            lp = lp + density::normal(z, z.lit(0.0), z.lit(1.0));
        }

        let f = latent_gp_vars(tape, &kernel, &xs, JITTER, &slot_vars, white);

        let mut log_lik = Vec::with_capacity(n);
        match &obs {
            GpObs::Scaled { y, scale } => {
                let nu = view.get("nu")[0];
                let s2 = view.get("resid_var")[0];
                lp = lp
                    + density::gamma(nu, nu.lit(2.0), nu.lit(0.1))
                    + density::half_cauchy(s2, s2.lit(5.0));
                let lam = s2.lit(1.0) / s2;
                for i in 0..n {
                    let latent = if kind == GpKind::ScaleFactor {
                        f[i].exp()
                    } else {
                        f[i].sigmoid()
                    };
                    let mu = latent * scale[i];
                    let ll = density::student_t_prec(anchor.lit(y[i]), nu, mu, lam);
                    lp = lp + ll;
                    log_lik.push(ll);
                }
            }
            GpObs::Binomial { k, n_trials } => {
                for i in 0..n {
                    let ll = density::binomial_logit(k[i], n_trials[i], f[i]);
                    lp = lp + ll;
                    log_lik.push(ll);
                }
            }
            GpObs::Counts { c, negbin } => {
                if *negbin {
                    let phi = view.get("phi")[0];
                    lp = lp + density::exponential(phi, phi.lit(1.0));
                    for i in 0..n {
                        let ll = density::neg_binomial(c[i] as f64, f[i].exp(), phi);
                        lp = lp + ll;
                        log_lik.push(ll);
                    }
                } else {
                    for i in 0..n {
                        let ll = density::poisson_log(c[i] as f64, f[i]);
                        lp = lp + ll;
                        log_lik.push(ll);
                    }
                }
            }
        }
        DensityParts {
            log_density: lp,
            log_lik: Some(log_lik),
        }
    }))
}

enum GpObs {
    Scaled { y: Vec<f64>, scale: Vec<f64> },
    Binomial { k: Vec<u64>, n_trials: Vec<u64> },
    Counts { c: Vec<u64>, negbin: bool },
}

pub fn fit_gp_series(
    series: &EntitySeries,
    kind: GpKind,
    cfg: &SamplerConfig,
) -> Result<Trace, Error> {
    nuts_sample(&gp_program(series, kind, false)?, cfg)
}

/// Detection-count fit with a negative binomial observation model.
pub fn fit_detection_count_negbin(
    series: &EntitySeries,
    cfg: &SamplerConfig,
) -> Result<Trace, Error> {
    nuts_sample(&gp_program(series, GpKind::DetectionCount, true)?, cfg)
}

fn block<'a>(trace: &'a Trace, name: &str) -> Result<&'a Vec<Vec<Vec<f64>>>, Error> {
    let i = trace
        .params
        .iter()
        .position(|p| p.name == name)
        .ok_or_else(|| Error::Validation(format!("trace has no parameter {name}")))?;
    Ok(&trace.samples[i])
}

fn draw_slots(trace: &Trace, kind: GpKind, ch: usize, dr: usize) -> Result<Vec<f64>, Error> {
    hyper_names(kind)
        .iter()
        .map(|n| block(trace, n).map(|b| b[ch][dr][0]))
        .collect()
}

/// Per-draw per-month latent quantity after the link (pi, p, lambda, or
/// beta), flattened over chains: shape `[chains * draws][month]`.
pub fn latent_link_samples(
    trace: &Trace,
    series: &EntitySeries,
    kind: GpKind,
) -> Result<Vec<Vec<f64>>, Error> {
    let kernel = kernel_for(kind);
    let white = block(trace, "white")?;
    let mut out = Vec::with_capacity(trace.chains * trace.draws);
    for ch in 0..trace.chains {
        for dr in 0..trace.draws {
            let slots = draw_slots(trace, kind, ch, dr)?;
            let f = latent_noncentered(&kernel, &series.months, &slots, &white[ch][dr], JITTER)?;
            out.push(f.iter().map(|&v| kind.link(v)).collect());
        }
    }
    Ok(out)
}

/// Posterior predictive latent values on a monthly grid extending the series
/// by `horizon` months: for each draw the latent function is conditioned on
/// its realized values and a Gaussian forecast is sampled, then linked.
/// Shape `[chains * draws][horizon]`; deterministic under `seed`.
pub fn forecast_latent(
    trace: &Trace,
    series: &EntitySeries,
    kind: GpKind,
    horizon: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, Error> {
    if horizon == 0 {
        return Err(Error::Validation("forecast horizon must be positive".into()));
    }
    let kernel = kernel_for(kind);
    let white = block(trace, "white")?;
    let last = series
        .months
        .last()
        .copied()
        .ok_or_else(|| Error::Validation("empty series".into()))?;
    let x_new: Vec<f64> = (1..=horizon).map(|i| last + i as f64).collect();
    let std_normal = Dist::Normal { mu: 0.0, sigma: 1.0 };
    let mut out = Vec::with_capacity(trace.chains * trace.draws);
    for ch in 0..trace.chains {
        for dr in 0..trace.draws {
            let slots = draw_slots(trace, kind, ch, dr)?;
            let f = latent_noncentered(&kernel, &series.months, &slots, &white[ch][dr], JITTER)?;
            let (mean, cov) = gp_condition(&series.months, &f, &kernel, &slots, &x_new, JITTER)?;
            let l = chol_with_jitter(&cov)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((ch * trace.draws + dr) as u64 + 1);
            let z = std_normal.sample1(&mut rng, horizon)?;
            let noise = matvec_lower(&l, &z);
            out.push(
                mean.iter()
                    .zip(&noise)
                    .map(|(m, e)| kind.link(m + e))
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// Predictive covariances can be numerically semidefinite; retry the
/// factorization with growing diagonal jitter.
fn chol_with_jitter(cov: &Mat) -> Result<Mat, Error> {
    let mut jitter = JITTER;
    for _ in 0..6 {
        let mut g = cov.clone();
        for i in 0..g.n {
            let d = g.get(i, i) + jitter;
            g.set(i, i, d);
        }
        if let Some(l) = cholesky(&g) {
            return Ok(l);
        }
        jitter *= 10.0;
    }
    Err(Error::Numerical(
        "forecast covariance is not positive definite".into(),
    ))
}

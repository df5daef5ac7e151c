//! Recovery and shrinkage behavior of the state-level linear model and the
//! hierarchical county model on synthetic data with known generators.

use flaretk_inference::diagnostics::{summarize, SummaryRow};
use flaretk_inference::dist::Dist;
use flaretk_inference::nuts::SamplerConfig;
use flaretk_models::{
    county_effects, fit_county_hierarchical, fit_state_linear, population_correlation,
    CountyMonthly, Parameterization, StateMonthly,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg(seed: u64, warmup: usize, draws: usize) -> SamplerConfig {
    SamplerConfig {
        chains: 2,
        warmup_iters: warmup,
        draw_iters: draws,
        seed,
        ..Default::default()
    }
}

fn row<'a>(rows: &'a [SummaryRow], name: &str) -> &'a SummaryRow {
    rows.iter().find(|r| r.param == name).unwrap()
}

fn state_data(alpha: f64, beta: f64, sigma: f64, n: usize, seed: u64) -> Vec<StateMonthly> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Dist::Normal { mu: 0.0, sigma };
    (0..n)
        .map(|m| {
            let v = 0.05 + 0.55 * rng.random::<f64>();
            let eps = noise.sample1(&mut rng, 1).unwrap()[0];
            StateMonthly::new(m, v, (alpha + beta * v + eps).max(0.0)).unwrap()
        })
        .collect()
}

#[test]
fn state_model_recovers_generator_within_three_sds() {
    let (a0, b0, s0) = (0.061, 0.535, 0.030);
    let data = state_data(a0, b0, s0, 44, 7);
    let fit = fit_state_linear(&data, &cfg(11, 500, 500)).unwrap();
    assert!(!fit.slope_unidentified);
    let rows = summarize(&fit.trace, 0.9);
    for (name, truth) in [("alpha", a0), ("beta", b0), ("sigma", s0)] {
        let r = row(&rows, name);
        assert!(r.rhat < 1.05, "{name} rhat {}", r.rhat);
        assert!(
            (r.mean - truth).abs() < 3.0 * r.sd,
            "{name}: {} vs {truth} (sd {})",
            r.mean,
            r.sd
        );
    }
}

#[test]
fn prior_only_slope_mean_is_about_one() {
    let fit = fit_state_linear(&[], &cfg(3, 600, 800)).unwrap();
    let rows = summarize(&fit.trace, 0.9);
    let beta = row(&rows, "beta");
    // Gamma(2, 2) prior mean 1, sd ~0.71; generous MC tolerance.
    assert!((beta.mean - 1.0).abs() < 0.2, "beta prior mean {}", beta.mean);
}

/// Per-county ordinary least squares, the no-pooling oracle.
fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[test]
fn sparse_county_slope_shrinks_toward_population_mean() {
    // County 0: 20 well-behaved months with slope ~0.5. County 1: only 2
    // months, deliberately consistent with a much steeper line.
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut data = Vec::new();
    let mut b_points = Vec::new();
    for m in 0..20 {
        let v = 0.1 + 0.4 * rng.random::<f64>();
        data.push(CountyMonthly {
            county: 0,
            month: m,
            viirs_bcm: v,
            ndic_bcm: 0.05 + 0.5 * v + 0.01 * (rng.random::<f64>() - 0.5),
        });
    }
    for (m, v) in [(0usize, 0.1f64), (1, 0.4)] {
        let y = 0.05 + 1.5 * v;
        data.push(CountyMonthly {
            county: 1,
            month: m,
            viirs_bcm: v,
            ndic_bcm: y,
        });
        b_points.push((v, y));
    }
    let (_, b_nopool) = least_squares(&b_points);
    assert!((b_nopool - 1.5).abs() < 1e-9);

    let trace =
        fit_county_hierarchical(&data, &Parameterization::Noncentered, &cfg(5, 500, 500)).unwrap();
    let (_, beta) = county_effects(&trace, &Parameterization::Noncentered).unwrap();
    let total = beta.len() as f64;
    let b_hat: f64 = beta.iter().map(|row| row[1]).sum::<f64>() / total;
    let rows = summarize(&trace, 0.9);
    let mu_beta = row(&rows, "mu_beta").mean;
    assert!(
        (b_hat - mu_beta).abs() < (b_nopool - mu_beta).abs(),
        "no shrinkage: county slope {b_hat}, population {mu_beta}, no-pool {b_nopool}"
    );
}

fn twelve_county_data(rho: f64, seed: u64) -> Vec<CountyMonthly> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Dist::Normal { mu: 0.0, sigma: 1.0 };
    let (sa, sb) = (0.05, 0.12);
    let mut data = Vec::new();
    for c in 0..12 {
        let z0 = noise.sample1(&mut rng, 1).unwrap()[0];
        let z1 = noise.sample1(&mut rng, 1).unwrap()[0];
        let a = 0.06 + sa * z0;
        let b = 0.5 + sb * (rho * z0 + (1.0 - rho * rho).sqrt() * z1);
        for m in 0..10 {
            let v = 0.1 + 0.4 * rng.random::<f64>();
            let eps = 0.01 * noise.sample1(&mut rng, 1).unwrap()[0];
            data.push(CountyMonthly {
                county: c,
                month: m,
                viirs_bcm: v,
                ndic_bcm: (a + b * v + eps).max(0.0),
            });
        }
    }
    data
}

#[test]
fn negative_generator_correlation_shows_in_the_posterior() {
    let data = twelve_county_data(-0.6, 33);
    let trace =
        fit_county_hierarchical(&data, &Parameterization::Noncentered, &cfg(9, 500, 500)).unwrap();
    let rho = population_correlation(&trace).unwrap();
    let below: f64 = rho.iter().filter(|&&r| r < 0.0).count() as f64 / rho.len() as f64;
    assert!(below > 0.7, "P(rho < 0) = {below}");
}

#[test]
fn centered_and_noncentered_give_the_same_posterior_means() {
    let data = twelve_county_data(-0.3, 55);
    let cfg_a = cfg(13, 600, 600);
    let tc = fit_county_hierarchical(&data, &Parameterization::Centered, &cfg_a).unwrap();
    let tn = fit_county_hierarchical(&data, &Parameterization::Noncentered, &cfg_a).unwrap();
    let rc = summarize(&tc, 0.9);
    let rn = summarize(&tn, 0.9);
    for name in ["mu_alpha", "mu_beta", "sigma"] {
        let a = row(&rc, name);
        let b = row(&rn, name);
        let se = (a.sd * a.sd / a.ess + b.sd * b.sd / b.ess).sqrt();
        assert!(
            (a.mean - b.mean).abs() < 2.0 * se + 1e-4,
            "{name}: {} vs {} (se {se})",
            a.mean,
            b.mean
        );
    }
}

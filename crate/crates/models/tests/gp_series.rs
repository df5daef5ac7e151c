//! Latent-GP series models on synthetic data: link ranges, degenerate
//! inputs, latent band coverage, and forecasting behavior.

use flaretk_inference::diagnostics::quantile_sorted;
use flaretk_inference::dist::Dist;
use flaretk_inference::nuts::SamplerConfig;
use flaretk_models::{
    fit_detection_count_negbin, fit_gp_series, forecast_latent, latent_link_samples,
    EntitySeries, GpKind,
};
use rand::SeedableRng;
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

#[test]
fn all_zero_flaring_wells_pin_the_proportion_near_zero() {
    let n = 24;
    let series = EntitySeries {
        months: (0..n).map(|i| i as f64).collect(),
        flaring_wells: Some(vec![0; n]),
        active_wells: Some(vec![50; n]),
        ..Default::default()
    };
    let trace = fit_gp_series(&series, GpKind::WellProportion, &cfg(2, 400, 400)).unwrap();
    let p = latent_link_samples(&trace, &series, GpKind::WellProportion).unwrap();
    for m in 0..n {
        let mut col: Vec<f64> = p.iter().map(|row| row[m]).collect();
        col.sort_by(f64::total_cmp);
        let upper = quantile_sorted(&col, 0.99);
        assert!(upper < 0.1, "month {m}: 99th percentile {upper}");
        assert!(col.iter().all(|&v| v > 0.0 && v < 1.0));
    }
}

#[test]
fn constant_rate_is_covered_by_latent_bands() {
    let n = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let counts: Vec<u64> = Dist::Poisson { lambda: 7.0 }
        .sample1(&mut rng, n)
        .unwrap()
        .iter()
        .map(|&v| v as u64)
        .collect();
    let series = EntitySeries {
        months: (0..n).map(|i| i as f64).collect(),
        detection_count: Some(counts),
        ..Default::default()
    };
    let trace = fit_gp_series(&series, GpKind::DetectionCount, &cfg(6, 400, 400)).unwrap();
    let lam = latent_link_samples(&trace, &series, GpKind::DetectionCount).unwrap();
    let mut covered = 0;
    for m in 0..n {
        let mut col: Vec<f64> = lam.iter().map(|row| row[m]).collect();
        assert!(col.iter().all(|&v| v > 0.0), "positive rate");
        col.sort_by(f64::total_cmp);
        let lo = quantile_sorted(&col, 0.025);
        let hi = quantile_sorted(&col, 0.975);
        if lo <= 7.0 && 7.0 <= hi {
            covered += 1;
        }
    }
    assert!(covered >= (n * 95) / 100, "covered {covered}/{n} months");
}

#[test]
fn negbin_detection_swap_exposes_dispersion() {
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let counts: Vec<u64> = Dist::NegBinomial { mu: 5.0, phi: 0.8 }
        .sample1(&mut rng, n)
        .unwrap()
        .iter()
        .map(|&v| v as u64)
        .collect();
    let series = EntitySeries {
        months: (0..n).map(|i| i as f64).collect(),
        detection_count: Some(counts),
        ..Default::default()
    };
    let trace = fit_detection_count_negbin(&series, &cfg(10, 300, 300)).unwrap();
    assert!(trace.params.iter().any(|p| p.name == "phi"));
    let phi: Vec<f64> = trace
        .scalar_series("phi")
        .unwrap()
        .into_iter()
        .flatten()
        .collect();
    assert!(phi.iter().all(|&v| v > 0.0));
    let mean = phi.iter().sum::<f64>() / phi.len() as f64;
    assert!(mean < 5.0, "overdispersed data should keep phi small: {mean}");
}

#[test]
fn forecast_widens_away_from_data_and_matches_prior_far_out() {
    let n = 36;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let counts: Vec<u64> = Dist::Poisson { lambda: 5.0 }
        .sample1(&mut rng, n)
        .unwrap()
        .iter()
        .map(|&v| v as u64)
        .collect();
    let series = EntitySeries {
        months: (0..n).map(|i| i as f64).collect(),
        detection_count: Some(counts),
        ..Default::default()
    };
    let trace = fit_gp_series(&series, GpKind::DetectionCount, &cfg(14, 400, 400)).unwrap();
    let horizon = 40;
    let fc = forecast_latent(&trace, &series, GpKind::DetectionCount, horizon, 99).unwrap();
    // Matern-only kernel: one-sided extrapolation spread never shrinks.
    let spread: Vec<f64> = (0..horizon)
        .map(|h| {
            let mut col: Vec<f64> = fc.iter().map(|row| row[h].ln()).collect();
            col.sort_by(f64::total_cmp);
            quantile_sorted(&col, 0.9) - quantile_sorted(&col, 0.1)
        })
        .collect();
    for h in 1..horizon {
        assert!(
            spread[h] >= spread[h - 1] - 0.15,
            "spread shrank at {h}: {} -> {}",
            spread[h - 1],
            spread[h]
        );
    }
    assert!(spread[horizon - 1] > spread[0], "no growth toward the prior");
    // Far beyond the length scale the latent forecast reverts to the prior
    // marginal: zero-mean on the log scale.
    let far: Vec<f64> = fc.iter().map(|row| row[horizon - 1].ln()).collect();
    let mean = far.iter().sum::<f64>() / far.len() as f64;
    assert!(mean.abs() < 1.0, "far-horizon log-latent mean {mean}");

    // Deterministic under the seed.
    let fc2 = forecast_latent(&trace, &series, GpKind::DetectionCount, horizon, 99).unwrap();
    assert_eq!(fc, fc2);
}

#[test]
fn gas_proportion_latents_are_probabilities_and_recover_level() {
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let gas: Vec<f64> = vec![1000.0; n];
    let noise = Dist::Normal { mu: 0.0, sigma: 5.0 };
    // True flaring share 0.2 with mild Student-like noise.
    let flared: Vec<f64> = (0..n)
        .map(|_| 200.0 + noise.sample1(&mut rng, 1).unwrap()[0])
        .collect();
    let series = EntitySeries {
        months: (0..n).map(|i| i as f64).collect(),
        flared: Some(flared),
        gas_prod: Some(gas),
        ..Default::default()
    };
    let trace = fit_gp_series(&series, GpKind::GasProportion, &cfg(18, 400, 400)).unwrap();
    let pi = latent_link_samples(&trace, &series, GpKind::GasProportion).unwrap();
    let mut all = 0.0;
    let mut count = 0.0;
    for row in &pi {
        for &v in row {
            assert!(v > 0.0 && v < 1.0, "proportion out of range: {v}");
            all += v;
            count += 1.0;
        }
    }
    let mean = all / count;
    assert!((mean - 0.2).abs() < 0.05, "mean flaring share {mean}");
}

//! Property tests over the transform and diagnostics layers.

use flaretk_inference::diagnostics::{ci_bounds, hdi};
use flaretk_inference::transform::Constraint;
use proptest::prelude::*;

fn unconstrained(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, dim)
}

proptest! {
    #[test]
    fn positive_round_trip(u in -20.0..20.0f64) {
        let (x, _) = Constraint::Positive.from_unconstrained(&[u]);
        prop_assert!(x[0] > 0.0);
        let (u2, _) = Constraint::Positive.to_unconstrained(&x).unwrap();
        prop_assert!((u - u2[0]).abs() < 1e-9);
    }

    #[test]
    fn unit_interval_round_trip(u in -20.0..20.0f64) {
        let (x, _) = Constraint::UnitInterval.from_unconstrained(&[u]);
        prop_assert!(x[0] > 0.0 && x[0] < 1.0);
        let (u2, _) = Constraint::UnitInterval.to_unconstrained(&x).unwrap();
        prop_assert!((u - u2[0]).abs() < 1e-7);
    }

    #[test]
    fn simplex_valid_everywhere(u in unconstrained(5)) {
        let (x, _) = Constraint::Simplex(6).from_unconstrained(&u);
        prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(x.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn cholesky_corr_valid_everywhere(u in unconstrained(6)) {
        let k = 4;
        let (l, _) = Constraint::CholeskyCorr(k).from_unconstrained(&u);
        for i in 0..k {
            let norm: f64 = (0..=i).map(|j| l[i * k + j].powi(2)).sum();
            prop_assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hdi_is_shortest(draws in prop::collection::vec(-100.0..100.0f64, 10..200),
                       prob in 0.5..0.99f64) {
        let (lo, hi) = hdi(&draws, prob);
        prop_assert!(lo <= hi);
        let mut sorted = draws.clone();
        sorted.sort_by(f64::total_cmp);
        let (et_lo, et_hi) = ci_bounds(&sorted, prob);
        prop_assert!(hi - lo <= et_hi - et_lo + 1e-9);
        // The window really covers the required mass.
        let m = (prob * draws.len() as f64).ceil() as usize;
        let covered = draws.iter().filter(|&&v| v >= lo && v <= hi).count();
        prop_assert!(covered >= m);
    }
}

use proptest::prelude::*;

use extremo::br::{extremogram_delta, pre_asymptotic_delta, tail_dependence_delta, IntervalSet};
use extremo::domain::{Lag, ObservationDomain, SpaceTimeField};
use extremo::extremogram::{bias_correct, empirical_extremogram, select_threshold, BiasRegime};
use extremo::stats::quantile_interp;
use extremo::study::{metrics, rate_band};
use extremo::subsample::block_starts;

fn interval() -> impl Strategy<Value = IntervalSet> {
    (0.2f64..3.0, prop::option::of(0.1f64..5.0))
        .prop_map(|(lo, w)| IntervalSet::new(lo, w.map_or(f64::INFINITY, |w| lo + w)).unwrap())
}

proptest! {
    #[test]
    fn extremogram_is_a_probability(delta in 1e-3f64..50.0, a in interval(), b in interval()) {
        let rho = extremogram_delta(delta, &a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&rho));
    }

    #[test]
    fn tail_dependence_decreases_in_delta(d1 in 1e-3f64..20.0, step in 1e-3f64..5.0) {
        prop_assert!(tail_dependence_delta(d1 + step) < tail_dependence_delta(d1));
    }

    #[test]
    fn pre_asymptotic_tends_to_limit(delta in 0.05f64..10.0, a in interval(), b in interval()) {
        let limit = extremogram_delta(delta, &a, &b).unwrap();
        let far = pre_asymptotic_delta(delta, &a, &b, 1e7).unwrap();
        prop_assert!((far - limit).abs() < 1e-5, "{} vs {}", far, limit);
    }

    #[test]
    fn quantile_is_monotone(mut v in prop::collection::vec(-1e3f64..1e3, 1..50), p in 0.0f64..1.0, q in 0.0f64..1.0) {
        v.sort_by(f64::total_cmp);
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(quantile_interp(&v, lo) <= quantile_interp(&v, hi));
        prop_assert!(quantile_interp(&v, lo) >= v[0] && quantile_interp(&v, hi) <= v[v.len() - 1]);
    }

    #[test]
    fn windows_tile_the_range(n in 1usize..300, b in 1usize..300, stride in 1usize..50) {
        prop_assume!(b <= n);
        let s = block_starts(n, b, stride);
        prop_assert_eq!(s[0], 0);
        prop_assert!(s.iter().all(|&x| x + b <= n));
        prop_assert!(s.windows(2).all(|w| w[1] - w[0] == stride));
        prop_assert!(s.last().unwrap() + stride + b > n);
    }

    #[test]
    fn rmse_dominates_mae(est in prop::collection::vec(prop::collection::vec(-5f64..5.0, 3), 1..20)) {
        let names: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let m = metrics(&est, &[0.5, 1.0, -1.0], &names, true).unwrap();
        for i in 0..3 {
            prop_assert!(m.rmse[i] + 1e-12 >= m.mae[i]);
        }
    }

    #[test]
    fn rate_band_shrinks_with_k(k in 1.01f64..10.0, lo in 0.0f64..0.15, width in 0.001f64..0.15) {
        let band = rate_band(k, 1, 3, lo, lo + width);
        prop_assert!(band[0] <= band[1] && band[1] < 1.0 && band[0] > 0.0);
        let wider = rate_band(2.0 * k, 1, 3, lo, lo + width);
        prop_assert!(wider[1] < band[1]);
    }

    #[test]
    fn estimates_and_counts_are_consistent(
        values in prop::collection::vec(0.01f64..100.0, 60),
        level in 0.5f64..0.95,
        h in 0i64..4,
    ) {
        let domain = ObservationDomain::rectangle(&[3], 20, 1).unwrap();
        let field = SpaceTimeField::new(domain, values).unwrap();
        let th = select_threshold(&field, level).unwrap();
        let r = IntervalSet::unit_ray();
        let lag = Lag::new(vec![0], vec![h]);
        if let Ok(est) = empirical_extremogram(&field, &[lag], &th, &r, &r) {
            let e = &est[0];
            prop_assert!(e.numerator_count <= e.denominator_count);
            prop_assert!(e.numerator_sites == 3 * (20 - h as u64));
            prop_assert!(e.value >= 0.0);
            if h == 0 {
                prop_assert_eq!(e.value, 1.0);
            }
            let none = bias_correct(&est, BiasRegime::None).unwrap();
            prop_assert_eq!(none[0].value, e.value);
            let fo = bias_correct(&est, BiasRegime::FirstOrder).unwrap();
            prop_assert!(fo[0].value >= 0.0);
        }
    }
}

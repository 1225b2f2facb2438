use proptest::prelude::*;
use qmm_core::wmse::{
    d_high_rate, d_iso, ukk_approx, waterfill, waterfill_distortion, waterfill_rate,
};

fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..100.0, 1..=40)
}

proptest! {
    #[test]
    fn tau_solves_parametric_system(lambda in spectrum(), rate in 0.01f64..8.0) {
        let sol = waterfill(&lambda, 1.0, rate).unwrap();
        prop_assert!((waterfill_rate(&lambda, sol.tau) - rate).abs() <= 1e-9);
        let d = waterfill_distortion(&lambda, 1.0, sol.tau);
        prop_assert!((d - sol.distortion).abs() <= 1e-12 * d);
    }

    #[test]
    fn distortion_decreasing_and_convex(lambda in spectrum(), sigma_w2 in 0.1f64..10.0) {
        let rates: Vec<f64> = (1..=40).map(|k| 0.2 * k as f64).collect();
        let d: Vec<f64> = rates
            .iter()
            .map(|&r| waterfill(&lambda, sigma_w2, r).unwrap().distortion)
            .collect();
        for w in d.windows(2) {
            prop_assert!(w[1] < w[0]);
        }
        for w in d.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12 * w[0]);
        }
    }

    #[test]
    fn high_rate_matches_closed_form(lambda in spectrum()) {
        let n = lambda.len() as f64;
        let gm = (lambda.iter().map(|v| v.ln()).sum::<f64>() / n).exp();
        let min = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
        let rate = 0.5 * (gm / min).log2() + 0.5;
        let d = waterfill(&lambda, 1.0, rate).unwrap().distortion;
        let hr = d_high_rate(&lambda, 1.0, rate).unwrap();
        prop_assert!((d - hr).abs() / d < 1e-9);
    }

    #[test]
    fn isotropic_dominates_waterfill(lambda in spectrum(), rate in 0.0f64..8.0) {
        let d = waterfill(&lambda, 1.0, rate).unwrap().distortion;
        prop_assert!(d_iso(&lambda, 1.0, rate).unwrap() >= d * (1.0 - 1e-12));
    }

    #[test]
    fn ukk_endpoints_are_means(lambda in prop::collection::vec(0.1f64..10.0, 2..=30)) {
        let n = lambda.len();
        let am = lambda.iter().sum::<f64>() / n as f64;
        let hm = n as f64 / lambda.iter().map(|v| 1.0 / v).sum::<f64>();
        prop_assert!((ukk_approx(&lambda, 1).unwrap() - am).abs() <= 1e-12 * am);
        prop_assert!((ukk_approx(&lambda, n).unwrap() - hm).abs() <= 1e-12 * hm);
    }
}

//! Correlation statistics against hand computations and an independent
//! F-distribution implementation.

use proptest::prelude::*;
use propinfer::data::{synth_generate, Scenario, SyntheticConfig, SENSITIVE_COLUMN, TARGET_COLUMN};
use propinfer::stats::{anova, cramers_v, cramers_v_table, pearson, special, classify_scenario, Thresholds};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

#[test]
fn pearson_hand_example() {
    // Centred cross products sum to 4 and each sum of squares is 5.
    let r = pearson(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap();
    assert!((r - 0.8).abs() < 1e-9);
}

#[test]
fn cramers_v_one_third() {
    let v = cramers_v_table(&[vec![20., 10.], vec![10., 20.]]).unwrap();
    assert!((v - 1.0 / 3.0).abs() < 1e-9);
    let a: Vec<u8> = [vec![0; 30], vec![1; 30]].concat();
    let b: Vec<u8> = [vec![0; 20], vec![1; 10], vec![0; 10], vec![1; 20]].concat();
    assert!((cramers_v(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn anova_f_two() {
    // Means 1 and 3 around 2: SSB = 4 on 1 df, SSW = 2 + 2 on 2 df, F = 4 / 2.
    let a = anova(&[vec![0., 2.], vec![2., 4.]]).unwrap();
    assert!((a.f - 2.0).abs() < 1e-9);
    // F(1, 2) = T² with two degrees of freedom: P(|T| > √2) = 1 − 1/√2.
    assert!((a.p_value - (1.0 - 0.5f64.sqrt())).abs() < 1e-9);
}

#[test]
fn anova_four_against_four() {
    let a = anova(&[vec![1., 2., 3., 4.], vec![2., 3., 4., 5.]]).unwrap();
    assert!((a.f - 1.2).abs() < 1e-9);
    let oracle = 1.0 - FisherSnedecor::new(1.0, 6.0).unwrap().cdf(1.2);
    assert!((a.p_value - oracle).abs() < 1e-9);
}

#[test]
fn f_tail_matches_statrs() {
    for &(f, d1, d2) in &[(0.3, 1.0, 5.0), (2.0, 3.0, 10.0), (4.5, 2.0, 40.0), (1.0, 7.0, 7.0), (12.0, 4.0, 200.0), (0.05, 10.0, 3.0)] {
        let oracle = 1.0 - FisherSnedecor::new(d1, d2).unwrap().cdf(f);
        let ours = special::f_upper_tail(f, d1, d2);
        assert!((ours - oracle).abs() < 1e-9, "F({d1},{d2}) at {f}: {ours} vs {oracle}");
    }
}

#[test]
fn generator_round_trip() {
    for (scenario, seed) in [(Scenario::FeaturesOnly, 1), (Scenario::Independent, 2), (Scenario::CorrelatedBoth, 3), (Scenario::LabelOnly, 4)] {
        let cfg = SyntheticConfig { n_records: 10_000, ..SyntheticConfig::new(scenario) };
        let ds = synth_generate(&cfg, seed).unwrap();
        let report = classify_scenario(&ds, Thresholds::default()).unwrap();
        assert_eq!(report.scenario, scenario, "{}", report.to_kv());
    }
}

#[test]
fn independent_generator_statistics() {
    let cfg = SyntheticConfig { n_records: 10_000, ..SyntheticConfig::new(Scenario::Independent) };
    let ds = synth_generate(&cfg, 17).unwrap();
    let a = ds.column_values(SENSITIVE_COLUMN).unwrap();
    for name in cfg.feature_names().iter().filter(|n| n.starts_with('x')) {
        let r = pearson(&a, &ds.column_values(name).unwrap()).unwrap();
        assert!(r.abs() < 0.05, "{name}: {r}");
    }
    let y = ds.column_values(TARGET_COLUMN).unwrap();
    let high: Vec<bool> = a.iter().map(|&v| v > 5.0).collect();
    let groups = propinfer::stats::group_by(&high, &y).unwrap();
    assert!(anova(&groups).unwrap().p_value > 0.1);
}

fn sample() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..40).prop_flat_map(|n| (prop::collection::vec(-100.0..100.0f64, n), prop::collection::vec(-100.0..100.0f64, n)))
}

proptest! {
    #[test]
    fn pearson_symmetric_and_affine((x, y) in sample(), a in 0.1..10.0f64, b in -50.0..50.0f64) {
        let r = pearson(&x, &y).unwrap();
        prop_assert!((r - pearson(&y, &x).unwrap()).abs() < 1e-9);
        let scaled: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((r - pearson(&scaled, &y).unwrap()).abs() < 1e-9);
        let flipped: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
        prop_assert!((r + pearson(&flipped, &y).unwrap()).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn cramers_v_relabel_and_swap(a in prop::collection::vec(0u8..3, 30..80), b in prop::collection::vec(0u8..4, 80)) {
        let b = &b[..a.len()];
        prop_assume!(a.iter().any(|&v| v != a[0]) && b.iter().any(|&v| v != b[0]));
        let v = cramers_v(&a, b).unwrap();
        prop_assert!((v - cramers_v(b, &a).unwrap()).abs() < 1e-9);
        let relabeled: Vec<u8> = a.iter().map(|&x| 9 - x).collect();
        prop_assert!((v - cramers_v(&relabeled, b).unwrap()).abs() < 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
    }

    #[test]
    fn anova_shift_invariant(g1 in prop::collection::vec(-10.0..10.0f64, 2..15), g2 in prop::collection::vec(-10.0..10.0f64, 2..15), c in -1e3..1e3f64) {
        let p = anova(&[g1.clone(), g2.clone()]).unwrap().p_value;
        let shifted = anova(&[g1.iter().map(|v| v + c).collect(), g2.iter().map(|v| v + c).collect()]).unwrap().p_value;
        prop_assert!((p - shifted).abs() < 1e-6);
    }

    #[test]
    fn anova_separation_lowers_p(g in prop::collection::vec(-1.0..1.0f64, 3..12), d in 0.1..5.0f64) {
        prop_assume!(g.iter().any(|&v| (v - g[0]).abs() > 1e-3));
        let near = anova(&[g.clone(), g.iter().map(|v| v + d).collect()]).unwrap().p_value;
        let far = anova(&[g.clone(), g.iter().map(|v| v + 2.0 * d).collect()]).unwrap().p_value;
        prop_assert!(far <= near);
    }
}

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rice_lab::cit::{causal_feature, toy_transform_family, Transform, TransformChain};
use rice_lab::objectives::smooth_max;
use rice_lab::scm_toy::{angle_alpha, inv_norm_cdf, sample_dataset, Matrix2};

fn matrix() -> impl Strategy<Value = Matrix2<f64>> {
    prop::array::uniform4(-10.0f64..10.0).prop_map(|v| Matrix2::new(v[0], v[1], v[2], v[3]))
}

/// Rounding in a 2×2 determinant scales with the squared entry size.
fn det_tol(x: &Matrix2<f64>, steps: usize) -> f64 {
    let s = x.max_abs_diff(&Matrix2::zero());
    1e-12 * (1.0 + steps as f64) * (1.0 + s * s)
}

fn neg(x: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(-x.x11, -x.x21, -x.x12, -x.x22)
}

proptest! {
    #![proptest_config(Config { cases: 512, rng_seed: RngSeed::Fixed(20), failure_persistence: None, ..Config::default() })]

    #[test]
    fn angle_ignores_direction(x in matrix()) {
        prop_assume!(x.x11 + x.x12 != 0.0 || x.x21 + x.x22 != 0.0);
        let a = angle_alpha(&x).unwrap();
        prop_assert!(a > 0.0 && a < std::f64::consts::PI);
        prop_assert!((a - angle_alpha(&neg(&x)).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn each_transform_preserves_the_feature(x in matrix()) {
        let g = causal_feature(&x);
        for t in toy_transform_family::<f64>() {
            prop_assert!((causal_feature(&t.apply(&x)) - g).abs() <= det_tol(&x, 1));
        }
    }

    #[test]
    fn chains_preserve_the_feature(x in matrix(), picks in prop::collection::vec(0usize..6, 0..8)) {
        let fam = toy_transform_family::<f64>();
        let chain = TransformChain::new(picks.iter().map(|&i| fam[i]).collect());
        let g = causal_feature(&x);
        prop_assert!((causal_feature(&chain.apply(&x)) - g).abs() <= det_tol(&x, picks.len()));
    }

    #[test]
    fn smooth_max_lies_between_mean_and_max(v in prop::collection::vec(-50.0f64..50.0, 1..12), c in 0.01f64..5.0) {
        let s = smooth_max(&v, c).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(s <= max + 1e-9 && s >= mean - 1e-9);
    }

    #[test]
    fn strict_ranges_are_enforced(theta in -3.0f64..3.0, a in 0.1f64..3.0) {
        let q = std::f64::consts::FRAC_PI_4;
        prop_assert_eq!(Transform::rotate(theta).is_ok(), (0.0..=q).contains(&theta));
        prop_assert_eq!(Transform::scale_cols(a).is_ok(), (2.0 / 3.0..=1.5).contains(&a));
    }
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn spurious_correlation_strength_follows_a() {
    for a in [-3.0, -1.0, 0.5, 3.0] {
        let d = sample_dataset::<f64>(100_000, a, 17).unwrap();
        let z: Vec<f64> = d
            .samples
            .iter()
            .map(|s| inv_norm_cdf(angle_alpha(&s.x).unwrap() / std::f64::consts::PI).unwrap())
            .collect();
        let eta: Vec<f64> = d.samples.iter().map(|s| s.noise()).collect();
        let r = corr(&z, &eta);
        let want = a / (a * a + 1.0f64).sqrt();
        assert!(
            (r - want).abs() <= 0.02,
            "a = {a}: corr {r}, expected {want}"
        );
    }
}

#[test]
fn non_invariant_map_is_detected() {
    let d = sample_dataset::<f64>(100, 0.0, 1).unwrap();
    let xs: Vec<Matrix2<f64>> = d.samples.iter().map(|s| s.x).collect();
    assert!(!rice_lab::cit::is_invariant(
        |x: &Matrix2<f64>| x.scale(2.0),
        &xs,
        1e-9
    ));
    assert!(rice_lab::cit::is_cit(&Transform::Identity, &xs, 1e-15));
}

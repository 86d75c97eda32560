//! Property tests of the structural invariants: series kernels stay inside
//! the unit band and dominate the identity when contractive, composition
//! is associative, and rate functions are quadratically homogeneous with
//! the exact diagonal closed form.

use proptest::prelude::*;

use dka_core::iteration::iterate_kernel;
use dka_core::kernels::{BuiltinKernel, Kernel};
use dka_core::rates::{matrix_b2, rate_eval, ProfileEval};
use dka_core::sphere::PointConfig;

fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
    // at least one coefficient at q >= 2, so the kernel is non-affine
    (
        prop::collection::vec(0.0f64..1.0, 2..6),
        1e-3f64..1.0,
        0usize..4,
    )
        .prop_map(|(mut head, tail_coeff, gap)| {
            head.extend(std::iter::repeat_n(0.0, gap));
            head.push(tail_coeff);
            head
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_kernels_stay_in_the_unit_band(coeffs in series_strategy(), t in -1.0f64..1.0) {
        let k = Kernel::from_hermite(&coeffs).unwrap();
        prop_assert_eq!(k.eval(1.0), 1.0);
        // strict inside the open interval
        if t.abs() < 1.0 - 1e-9 {
            prop_assert!(k.eval(t).abs() < 1.0);
        }
    }

    #[test]
    fn series_kernels_nondecreasing_on_the_right_half(coeffs in series_strategy(),
                                                      a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let k = Kernel::from_hermite(&coeffs).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(k.eval(lo) <= k.eval(hi) + 1e-13);
    }

    #[test]
    fn contractive_kernels_dominate_identity(coeffs in series_strategy(), t in -1.0f64..=1.0) {
        let k = Kernel::from_hermite(&coeffs).unwrap();
        if k.derivative_at_one() <= 1.0 {
            prop_assert!(k.eval(t) >= t - 1e-13);
        }
    }

    #[test]
    fn deficit_matches_direct_evaluation(coeffs in series_strategy(), u in 0.0f64..2.0) {
        let k = Kernel::from_hermite(&coeffs).unwrap();
        let direct = 1.0 - k.eval(1.0 - u);
        let stable = k.deficit(u);
        prop_assert!((direct - stable).abs() <= 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn composition_is_associative(gamma in 0.3f64..4.0, t in -1.0f64..=1.0,
                                  l1 in 0u64..12, l2 in 0u64..12) {
        let k = Kernel::builtin(BuiltinKernel::Exponential { gamma }).unwrap();
        let whole = iterate_kernel(&k, t, l1 + l2);
        let split = iterate_kernel(&k, iterate_kernel(&k, t, l2), l1);
        prop_assert!((whole - split).abs() <= 1e-13);
    }

    #[test]
    fn rate_values_scale_quadratically(seed in 0u64..200, alpha in -3.0f64..3.0) {
        let cfg = PointConfig::uniform(2, 3, seed).unwrap();
        let profile = ProfileEval::ExponentialLow { gamma: 2.0 };
        let model = matrix_b2(&profile, &cfg, 2).unwrap();
        let y = [0.7, -0.3, 1.1];
        let base = rate_eval(&model, &y);
        let scaled_y: Vec<f64> = y.iter().map(|v| alpha * v).collect();
        let scaled = rate_eval(&model, &scaled_y);
        if base.in_range {
            prop_assert!((scaled.value - alpha * alpha * base.value).abs()
                <= 1e-9 * (1.0 + scaled.value.abs()));
        }
    }
}

#[test]
fn diagonal_rate_closed_form_over_many_arguments() {
    // rate_eval on h I equals |y|^2 / (2h) for 100 pseudo-random vectors
    let cfg = PointConfig::uniform(3, 4, 31).unwrap();
    let h = 0.5;
    let profile = ProfileEval::SparseFlat { h, symmetric: true };
    let model = matrix_b2(&profile, &cfg, 3).unwrap();
    for trial in 0..100u64 {
        let y: Vec<f64> = (0..4)
            .map(|i| (((trial * 37 + i * 11 + 5) % 41) as f64 - 20.0) / 9.0)
            .collect();
        let expect: f64 = y.iter().map(|v| v * v).sum::<f64>() / (2.0 * h);
        let rv = rate_eval(&model, &y);
        assert!(rv.in_range);
        assert!(
            (rv.value - expect).abs() <= 1e-12 * (1.0 + expect),
            "trial {trial}: {} vs {expect}",
            rv.value
        );
    }
}

#[test]
fn rate_positivity_and_zero_characterization() {
    let cfg = PointConfig::uniform(2, 3, 77).unwrap();
    let profile = ProfileEval::ExponentialLow { gamma: 2.0 };
    let model = matrix_b2(&profile, &cfg, 2).unwrap();
    assert_eq!(rate_eval(&model, &[0.0, 0.0, 0.0]).value, 0.0);
    for trial in 0..50u64 {
        let y: Vec<f64> = (0..3)
            .map(|i| (((trial * 29 + i * 13 + 1) % 31) as f64 - 15.0) / 7.0)
            .collect();
        if y.iter().any(|&v| v != 0.0) {
            let rv = rate_eval(&model, &y);
            if rv.in_range {
                assert!(rv.value > 0.0);
            }
        }
    }
}

use gauss_quad::GaussLegendre;
use proptest::prelude::*;
use std::f64::consts::E;
use std::num::NonZeroUsize;
use stopping_core::threshold::{gm_asymptotic, gm_foc_residual, gm_level};
use stopping_core::{dynkin_threshold, gm_threshold, lambda_pair, single_threshold, ThresholdFn};

/// Composite Gauss-Legendre rule with `panels` equal panels of degree 20.
fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(20).unwrap());
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| rule.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &f))
        .sum()
}

fn step_fn() -> impl Strategy<Value = ThresholdFn> {
    (
        prop::collection::vec(0.001f64..0.999, 0..12),
        prop::collection::vec(0.0f64..1.3, 13),
    )
        .prop_map(|(mut b, mut v)| {
            b.sort_by(f64::total_cmp);
            b.dedup();
            b.push(1.0);
            v.truncate(b.len());
            v.sort_by(|x, y| y.total_cmp(x));
            ThresholdFn::new(b, v).unwrap()
        })
}

#[test]
fn eval_examples() {
    let d = dynkin_threshold(1.0 / E).unwrap();
    assert_eq!(d.eval(0.2), 1.0);
    assert_eq!(d.eval(0.5), 0.0);
    assert_eq!(d.eval(1.0 / E), 1.0);
    assert_eq!(d.eval(0.0), 1.0);
    let one = ThresholdFn::constant(1.0).unwrap();
    assert!([0.0, 0.3, 1.0].iter().all(|&t| one.eval(t) == 1.0));
    assert_eq!(dynkin_threshold(0.0).unwrap(), ThresholdFn::constant(0.0).unwrap());
    assert_eq!(dynkin_threshold(1.0).unwrap(), ThresholdFn::constant(1.0).unwrap());
}

#[test]
fn inverse_examples() {
    assert_eq!(dynkin_threshold(1.0 / E).unwrap().generalized_inverse(0.5), 1.0 / E);
    assert_eq!(ThresholdFn::constant(0.0).unwrap().generalized_inverse(0.5), 0.0);
    let th = ThresholdFn::new(vec![0.3, 0.7, 1.0], vec![1.0, 0.4, 0.0]).unwrap();
    assert_eq!(th.generalized_inverse(0.4), 0.7);
    assert_eq!(ThresholdFn::constant(1.0).unwrap().generalized_inverse(0.5), 1.0);
}

#[test]
fn single_threshold_examples() {
    assert_eq!(single_threshold(1).unwrap().eval(0.5), 0.0);
    assert_eq!(single_threshold(2).unwrap().eval(0.5), 0.5);
    assert!((single_threshold(10).unwrap().eval(0.5) - 0.9).abs() < 1e-15);
    assert!(single_threshold(0).is_err());
}

#[test]
fn robustify_band_examples() {
    let gm = gm_threshold(10, 101).unwrap();
    let peak = gm.robustify(&lambda_pair(1.0 / E).unwrap());
    assert_eq!(peak, dynkin_threshold(1.0 / E).unwrap());
    let above = ThresholdFn::new(vec![0.5, 1.0], vec![1.4, 0.2]).unwrap();
    let clamped = above.robustify(&lambda_pair(0.0).unwrap());
    assert_eq!(clamped, ThresholdFn::new(vec![0.5, 1.0], vec![1.0, 0.2]).unwrap());
}

#[test]
fn robust_gm_shape() {
    let pair = lambda_pair(1.0 / 3.0).unwrap();
    let th = gm_threshold(10, 1001).unwrap().robustify(&pair);
    assert_eq!(th.breaks()[0], pair.lambda1);
    assert_eq!(th.values()[0], 1.0);
    assert_eq!(*th.values().last().unwrap(), 0.0);
    assert_eq!(th.generalized_inverse(1e-300), pair.lambda2);
    for (a, b, v) in th.pieces() {
        if a >= pair.lambda1 && b <= pair.lambda2 {
            assert!(v > 0.0 && v < 1.0, "middle piece ({a}, {b}] at {v}");
        }
    }
    assert!((pair.lambda1 - 0.220).abs() < 1e-3 && (pair.lambda2 - 0.538).abs() < 1e-3);
}

#[test]
fn gm_residual_at_every_grid_point() {
    for n in [2usize, 5, 10, 50] {
        let m = 101;
        let th = gm_threshold(n, m).unwrap();
        assert_eq!(th.values().len(), m - 1, "n={n}: levels must be distinct");
        for (j, &v) in th.values().iter().enumerate() {
            let s = j as f64 / (m - 1) as f64;
            let r = gm_foc_residual(n, s, v);
            assert!(r.abs() <= 1e-9, "n={n} s={s}: residual {r}");
        }
    }
}

#[test]
fn gm_level_matches_gauss_oracle() {
    // the condition in its original variable, integrated by a different rule
    for n in [2usize, 5, 10, 50] {
        for s in [0.0, 0.3, 0.7, 0.95] {
            let th = gm_level(n, s).unwrap();
            let k = (n - 1) as i32;
            let lhs = gauss(
                |t| {
                    let u = 1.0 - t;
                    if u == 0.0 {
                        k as f64 * (1.0 / th - 1.0)
                    } else {
                        ((u / th + t).powi(k) - 1.0) / u
                    }
                },
                s,
                1.0,
                50,
            );
            assert!((lhs - 1.0).abs() <= 1e-9, "n={n} s={s}: {lhs}");
        }
    }
}

#[test]
fn gm_boundary_and_monotone() {
    assert_eq!(gm_level(10, 1.0).unwrap(), 0.0);
    let th = gm_threshold(10, 201).unwrap();
    assert_eq!(th.values().len(), 200);
    assert!(th.values().windows(2).all(|w| w[1] < w[0]));
    assert!(gm_threshold(1, 10).is_err() && gm_threshold(5, 1).is_err());
}

#[test]
fn gm_approaches_asymptotic_form() {
    let c = 0.80435;
    let d = (gm_level(1000, 0.5).unwrap() - gm_asymptotic(0.5, 1000, c).unwrap()).abs();
    assert!(d <= 1e-4, "{d}");
    let scaled: Vec<f64> = [100usize, 1000, 10000]
        .iter()
        .map(|&n| n as f64 * (gm_level(n, 0.5).unwrap() - gm_asymptotic(0.5, n, c).unwrap()).abs())
        .collect();
    assert!(scaled[0] > scaled[1] && scaled[1] > scaled[2], "{scaled:?}");
}

#[test]
fn asymptotic_examples() {
    let v = gm_asymptotic(0.0, 2, 0.80435).unwrap();
    assert!((v - 1.0 / 1.80435).abs() < 1e-12);
    assert!(gm_asymptotic(0.3, 1_000_000_000, 0.80435).unwrap() > 1.0 - 1e-8);
    assert!(gm_asymptotic(1.0, 10, 0.80435).is_err());
}

#[test]
fn csv_round_trip_is_exact() {
    let th = gm_threshold(7, 53).unwrap().robustify(&lambda_pair(0.2).unwrap());
    let text = th.to_csv();
    assert!(text.starts_with("t,theta\n"));
    assert_eq!(ThresholdFn::from_csv(&text).unwrap(), th);
}

proptest! {
    #[test]
    fn robustify_is_idempotent(th in step_fn(), beta in 0.0f64..0.3678) {
        let pair = lambda_pair(beta).unwrap();
        let once = th.robustify(&pair);
        prop_assert_eq!(once.robustify(&pair), once);
    }

    #[test]
    fn robustified_threshold_has_its_bands(th in step_fn(), beta in 0.01f64..0.36) {
        let pair = lambda_pair(beta).unwrap();
        let r = th.robustify(&pair);
        prop_assert_eq!(r.eval(pair.lambda1 * 0.999), 1.0);
        prop_assert_eq!(r.eval(pair.lambda2 + 1e-9), 0.0);
        prop_assert!(r.values().iter().all(|&v| v <= 1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn inverse_agrees_with_eval(th in step_fn()) {
        let mut ts: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        ts.extend_from_slice(th.breaks());
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let t_star = th.generalized_inverse(x);
            for &t in &ts {
                // left continuity holds θ(t*) >= x, except when the drop is at 0
                if t < t_star || (t == t_star && t_star > 0.0) {
                    prop_assert!(th.eval(t) >= x, "x={} t={} t*={}", x, t, t_star);
                } else {
                    prop_assert!(th.eval(t) < x, "x={} t={} t*={}", x, t, t_star);
                }
            }
        }
    }
}

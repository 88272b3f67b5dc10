use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::E;
use std::num::NonZeroUsize;
use stopping_core::analytics::{
    check_maxexp_conditions, constant_c_series, g_of_q, gamma_n, googol_win_formula, l_of_z,
    maxexp_tail_prob, maxprob_alpha, solve_constant_c,
};
use stopping_core::engine::simulate_outcomes;
use stopping_core::quadrature::{integrate_detailed, QuadratureSpec};
use stopping_core::{dynkin_threshold, gm_threshold, lambda_pair, Prior, ThresholdFn};

/// Composite degree-20 Gauss-Legendre over `[a, b]` cut at `breaks`, with
/// `panels` equal panels per cell.
fn gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], panels: usize) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(20).unwrap());
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.windows(2)
        .map(|w| {
            let h = (w[1] - w[0]) / panels as f64;
            (0..panels)
                .map(|i| rule.integrate(w[0] + i as f64 * h, w[0] + (i + 1) as f64 * h, f))
                .sum::<f64>()
        })
        .sum()
}

/// `E1(x)` from its power series, fine for moderate `x`.
fn exp_integral_e1(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..80 {
        term *= -x / k as f64;
        sum += term / k as f64;
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Frozen from the first verified run; the nested Gauss oracle below agrees.
const MAXPROB_AT_ONE_THIRD: f64 = 4.8230632842099941e-1;

#[test]
fn constant_c_solves_its_series() {
    let c = solve_constant_c();
    assert!((constant_c_series(c) - 1.0).abs() <= 1e-12);
    assert!((c - 0.80435).abs() < 5e-5);
    // the series is increasing, so the root is unique
    assert!(constant_c_series(c - 1e-6) < 1.0 && constant_c_series(c + 1e-6) > 1.0);
}

#[test]
fn maxprob_matches_nested_gauss() {
    let pair = lambda_pair(1.0 / 3.0).unwrap();
    let c = solve_constant_c();
    let inner = |s: f64| gauss(&|t: f64| (-c * t / (1.0 - s)).exp() / t, s, 1.0, &[], 8);
    let oracle = 1.0 / 3.0 + gauss(&inner, pair.lambda1, pair.lambda2, &[], 8);
    let got = maxprob_alpha(1.0 / 3.0).unwrap();
    assert!((got - oracle).abs() <= 1e-6, "{got} vs {oracle}");
    assert!((got - MAXPROB_AT_ONE_THIRD).abs() <= 1e-12, "{got:.17e}");
}

#[test]
fn maxprob_without_robustness_has_closed_form() {
    // swapping the order of integration leaves e^-c + (e^c - c - 1) E1(c)
    let c = solve_constant_c();
    let closed = (-c).exp() + (c.exp() - c - 1.0) * exp_integral_e1(c);
    let got = maxprob_alpha(0.0).unwrap();
    assert!((got - closed).abs() <= 1e-8, "{got} vs {closed}");
    assert!((got - 0.5801).abs() <= 5e-4);
}

#[test]
fn maxprob_peak_and_monotone_curve() {
    assert!((maxprob_alpha(1.0 / E).unwrap() - 1.0 / E).abs() <= 1e-9);
    let curve: Vec<f64> = (0..50)
        .map(|i| maxprob_alpha(i as f64 / 49.0 / E).unwrap())
        .collect();
    for w in curve.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{w:?}");
    }
    // the roots move like sqrt(1/e - β) near the peak, but the curve still closes up
    for (delta, gap) in [(1e-6, 3e-3), (1e-10, 3e-5)] {
        let near = maxprob_alpha(1.0 / E - delta).unwrap();
        assert!(near - 1.0 / E < gap, "δ={delta}: {near}");
    }
    assert!(curve.iter().zip(0..).all(|(&a, i)| a >= i as f64 / 49.0 / E - 1e-12));
}

#[test]
fn gamma_of_dynkin_has_closed_form() {
    for n in [1usize, 2, 5, 20] {
        for lam in [0.1, 1.0 / E, 0.7] {
            let w: f64 = 1.0 - lam;
            let mut exact = w.powi(n as i32) / n as f64;
            for j in 0..n.saturating_sub(1) {
                exact += lam * w.powi(j as i32 + 1) / (j + 1) as f64;
            }
            let got = gamma_n(&dynkin_threshold(lam).unwrap(), n).unwrap();
            assert!((got - exact).abs() <= 1e-10, "n={n} λ={lam}: {got} vs {exact}");
        }
    }
}

#[test]
fn gamma_matches_mean_googol_probability() {
    // with a correct prior the sorted quantiles are uniform order statistics
    let th = gm_threshold(4, 51).unwrap().robustify(&lambda_pair(0.2).unwrap());
    let n = 4;
    let draws = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut sum = 0.0;
    for _ in 0..draws {
        let mut q: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        q.sort_by(f64::total_cmp);
        sum += googol_win_formula(&q, &th).unwrap();
    }
    let mean = sum / draws as f64;
    let exact = gamma_n(&th, n).unwrap();
    // each formula value lies in [0, 1], so the standard error is below 1/(2 sqrt(draws))
    assert!((mean - exact).abs() <= 4.0 * 0.5 / (draws as f64).sqrt(), "{mean} vs {exact}");
}

#[test]
fn g_matches_gauss_oracle() {
    let th = ThresholdFn::new(vec![0.2, 0.45, 0.8, 1.0], vec![1.0, 0.7, 0.3, 0.0]).unwrap();
    for q in [1.0, 0.5, 0.25] {
        let start = th.generalized_inverse(q);
        let f = |t: f64| {
            let inner = gauss(&|s: f64| th.eval(s).min(q).powf(t), 0.0, t, th.breaks(), 4);
            inner / (q * t)
        };
        let oracle = gauss(&f, start, 1.0, th.breaks(), 8);
        let got = g_of_q(&th, q).unwrap();
        assert!((got - oracle).abs() <= 1e-9, "q={q}: {got} vs {oracle}");
    }
    assert!(g_of_q(&th, 0.0).is_err());
}

#[test]
fn l_matches_gauss_oracle() {
    let th = ThresholdFn::new(vec![0.2, 0.45, 0.8, 1.0], vec![1.0, 0.7, 0.3, 0.0]).unwrap();
    for z in [0.2, 0.3, 0.6, 0.9] {
        let f = |t: f64| {
            let inner = gauss(&|s: f64| th.eval(s.max(z)).powf(t), 0.0, t, th.breaks(), 4);
            inner / t
        };
        let mut cuts = th.breaks().to_vec();
        cuts.push(z);
        let oracle = gauss(&f, z, 1.0, &cuts, 8);
        let got = l_of_z(&th, z).unwrap();
        assert!((got - oracle).abs() <= 1e-9, "z={z}: {got} vs {oracle}");
    }
}

#[test]
fn dynkin_cannot_be_fully_consistent() {
    let pair = lambda_pair(0.2).unwrap();
    let d = dynkin_threshold(1.0 / E).unwrap();
    assert!(check_maxexp_conditions(&d, 1.0, &pair, 200).unwrap() < 0.0);
    assert!(check_maxexp_conditions(&d, 0.0, &pair, 200).unwrap() >= 0.0);
    assert!(check_maxexp_conditions(&d, 0.5, &pair, 0).is_err());
}

#[test]
fn condition_check_matches_direct_evaluation() {
    let pair = lambda_pair(0.15).unwrap();
    let th = gm_threshold(6, 41).unwrap().robustify(&pair);
    let alpha = 0.4;
    let grid = 57;
    let direct = (0..grid)
        .map(|i| {
            let z = pair.lambda1 + (pair.lambda2 - pair.lambda1) * i as f64 / (grid - 1) as f64;
            l_of_z(&th, z).unwrap() - alpha * th.eval(z)
        })
        .fold(f64::INFINITY, f64::min);
    let got = check_maxexp_conditions(&th, alpha, &pair, grid).unwrap();
    assert!((got - direct).abs() <= 1e-12, "{got} vs {direct}");
}

#[test]
fn tail_probability_matches_simulation() {
    let n = 5;
    let pair = lambda_pair(0.2).unwrap();
    let th = gm_threshold(8, 31).unwrap().robustify(&pair);
    let rooted = th.map_values(|v| v.powf(1.0 / n as f64)).unwrap();
    let u = Prior::uniform(0.0, 1.0).unwrap();
    let trials = 200_000;
    let outcomes = simulate_outcomes(&u, &u, &rooted, n, trials, 21).unwrap();
    for y in [0.5, 0.2, 0.8] {
        let level = f64::powf(y, 1.0 / n as f64);
        let hits = outcomes
            .iter()
            .filter(|o| o.accepted.is_some_and(|v| v >= level))
            .count() as f64;
        let p = hits / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let exact = maxexp_tail_prob(&th, n, y).unwrap();
        assert!((p - exact).abs() <= 4.0 * se, "y={y}: {p} ± {se} vs {exact}");
    }
    assert!(maxexp_tail_prob(&th, n, 1.5).is_err());
}

#[test]
fn googol_formula_rejects_bad_input() {
    let th = dynkin_threshold(0.3).unwrap();
    assert!(googol_win_formula(&[], &th).is_err());
    assert!(googol_win_formula(&[0.5, 0.2], &th).is_err());
    assert!(googol_win_formula(&[0.5, 1.2], &th).is_err());
}

#[test]
fn halving_tolerance_stays_within_tolerance() {
    let c = solve_constant_c();
    let integrands: Vec<(Box<dyn Fn(f64) -> f64>, f64, f64)> = vec![
        (Box::new(move |t: f64| (-c * t / 0.6).exp() / t), 0.4, 1.0),
        (Box::new(|t: f64| -t.ln()), 0.0, 1.0),
        (Box::new(|t: f64| (1.0 - t + 0.7 * t).powi(9) / t), 0.05, 1.0),
        (Box::new(|t: f64| 0.3f64.powf(t) * (t - 0.2) / t), 0.2, 0.9),
        (Box::new(|t: f64| (9.0 * (0.4 * t).ln_1p()).exp_m1() / t.max(1e-300)), 0.0, 0.7),
    ];
    for (i, (f, a, b)) in integrands.iter().enumerate() {
        for tol in [1e-6, 1e-9, 1e-11] {
            let coarse = integrate_detailed(f, *a, *b, &[], &QuadratureSpec::with_abs_tol(tol));
            let fine = integrate_detailed(f, *a, *b, &[], &QuadratureSpec::with_abs_tol(tol / 2.0));
            assert!(coarse.converged && fine.converged, "integrand {i} at {tol}");
            assert!(
                (coarse.value - fine.value).abs() < tol,
                "integrand {i} at {tol}: {} vs {}",
                coarse.value,
                fine.value
            );
        }
    }
}

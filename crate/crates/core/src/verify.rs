//! Named self-check suites run by the `verify` command.

use crate::analytics::{
    check_maxexp_conditions, constant_c_series, gamma_n, googol_win_formula, maxprob_alpha,
    solve_constant_c,
};
use crate::engine::{googol_win_mc, run_bicriteria, simulate, Instance};
use crate::error::{invalid, Result};
use crate::hardness::{build_polytope, point_from_rej};
use crate::lambda::{lambda_pair, neg_x_ln_x};
use crate::maxexp::{max_alpha_for_beta, solve_steps};
use crate::prior::{DiscretePrior, Prior};
use crate::threshold::{dynkin_threshold, gm_threshold, single_threshold, ThresholdFn};
use std::f64::consts::E;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn attempt(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => check(name, passed, detail),
        Err(e) => check(name, false, format!("error: {e}")),
    }
}

pub const SUITES: [&str; 3] = ["quick", "oracle", "golden"];

pub fn run_suite(name: &str) -> Result<Vec<CheckResult>> {
    match name {
        "quick" => Ok(quick()),
        "oracle" => Ok(oracle()),
        "golden" | "paper" => Ok(golden()),
        other => invalid(format!(
            "unknown suite {other:?}; expected one of {}",
            SUITES.join(", ")
        )),
    }
}

/// Identities that need no reference value.
pub fn quick() -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(attempt("uniform cdf and quantile", || {
        let u = Prior::uniform(0.0, 1.0)?;
        let ok = u.cdf(0.5) == 0.5 && u.quantile(0.25)? == 0.25;
        Ok((ok, format!("cdf(0.5)={}, quantile(0.25)={}", u.cdf(0.5), u.quantile(0.25)?)))
    }));
    out.push(attempt("discrete cdf and truncation", || {
        let d = DiscretePrior::from_pmf(&[0.5, 0.3, 0.2])?;
        let t = d.truncate(2)?;
        let ok = (d.cdf_at(2) - 0.8).abs() < 1e-15
            && d.quantile_index(0.6) == 2
            && (t.pmf(1) - 0.625).abs() < 1e-15;
        Ok((ok, format!("F(2)={}, truncated pmf(1)={}", d.cdf_at(2), t.pmf(1))))
    }));
    out.push(attempt("lambda roots at the extremes", || {
        let top = lambda_pair(1.0 / E)?;
        let zero = lambda_pair(0.0)?;
        let ok = top.lambda1 == top.lambda2 && zero.lambda1 == 0.0 && zero.lambda2 == 1.0;
        Ok((ok, format!("{top:?} {zero:?}")))
    }));
    out.push(attempt("threshold evaluation", || {
        let d = dynkin_threshold(1.0 / E)?;
        let s = single_threshold(10)?;
        let ok = d.eval(0.2) == 1.0 && d.eval(0.5) == 0.0 && (s.eval(0.3) - 0.9).abs() < 1e-15;
        Ok((ok, "dynkin and single-threshold levels".into()))
    }));
    out.push(attempt("robustify at the peak is dynkin", || {
        let pair = lambda_pair(1.0 / E)?;
        let r = gm_threshold(10, 51)?.robustify(&pair);
        let ok = r == dynkin_threshold(1.0 / E)?;
        Ok((ok, format!("{} pieces", r.values().len())))
    }));
    out.push(attempt("reject-all threshold never accepts", || {
        let one = ThresholdFn::constant(1.0)?;
        let u = Prior::uniform(0.0, 1.0)?;
        let inst = Instance::new(vec![0.9, 0.5], Some(vec![0.5, 0.8]))?;
        let g = googol_win_formula(&[0.3, 0.6, 0.9], &one)?;
        let ok = run_bicriteria(&inst, &u, &one)?.is_none() && g == 0.0 && gamma_n(&one, 5)?.abs() < 1e-10;
        Ok((ok, format!("googol formula {g}")))
    }));
    out.push(attempt("maxprob endpoint at the peak", || {
        let a = maxprob_alpha(1.0 / E)?;
        Ok(((a - 1.0 / E).abs() <= 1e-9, format!("alpha={a:.12}")))
    }));
    out.push(attempt("zero consistency always passes", || {
        let pair = lambda_pair(0.2)?;
        let th = gm_threshold(10, 51)?.robustify(&pair);
        let r = check_maxexp_conditions(&th, 0.0, &pair, 100)?;
        Ok((r >= 0.0, format!("worst slack {r:.3e}")))
    }));
    out.push(attempt("reject-all point feasible in the polytope", || {
        let d = DiscretePrior::harmonic(4)?;
        let m = build_polytope(3, &d, 0.5)?;
        let mut rej = vec![vec![1.0; 4]; 4];
        rej[0] = vec![1.0, 0.0, 0.0, 0.0];
        let x = point_from_rej(&m, &rej)?;
        let v = m.problem.max_violation(&x);
        Ok((v < 1e-12 && x[m.alpha].abs() < 1e-12, format!("violation {v:.2e}")))
    }));
    out
}

fn oracle_threshold(label: &str, n: usize) -> Result<ThresholdFn> {
    match label {
        "dynkin" => dynkin_threshold(1.0 / E),
        "gm" => gm_threshold(n, 201),
        _ => Ok(gm_threshold(n, 201)?.robustify(&lambda_pair(1.0 / 3.0)?)),
    }
}

/// Formula against Monte Carlo, within four combined standard errors.
pub fn oracle() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let trials = 100_000;
    for n in [3usize, 10] {
        for label in ["dynkin", "gm", "robust gm"] {
            let name = format!("win formula vs simulation, n={n}, {label}");
            out.push(attempt(&name, || {
                let theta = oracle_threshold(label, n)?;
                let u = Prior::uniform(0.0, 1.0)?;
                let exact = gamma_n(&theta, n)?;
                let sim = simulate(&u, &u, &theta, n, trials, 11)?;
                let ok = sim.maxprob.agrees_with(exact, 0.0, 4.0);
                Ok((ok, format!("formula {exact:.5}, simulated {:.5} ± {:.5}", sim.maxprob.value, sim.maxprob.std_error)))
            }));
            let name = format!("googol formula vs simulation, n={n}, {label}");
            out.push(attempt(&name, || {
                let theta = oracle_threshold(label, n)?;
                let predicted = Prior::uniform(0.0, n as f64 + 1.0)?;
                let values: Vec<f64> = (1..=n).map(|i| i as f64).collect();
                let q: Vec<f64> = values.iter().map(|&v| predicted.cdf(v)).collect();
                let exact = googol_win_formula(&q, &theta)?;
                let mc = googol_win_mc(&values, &predicted, &theta, trials, 12)?;
                let ok = mc.agrees_with(exact, 0.0, 4.0);
                Ok((ok, format!("formula {exact:.5}, simulated {:.5} ± {:.5}", mc.value, mc.std_error)))
            }));
        }
    }
    out
}

/// Reference numbers quoted with the algorithms.
pub fn golden() -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(attempt("constant c", || {
        let c = solve_constant_c();
        let res = (constant_c_series(c) - 1.0).abs();
        Ok(((0.80430..=0.80440).contains(&c) && res <= 1e-12, format!("c={c:.8}, residual {res:.1e}")))
    }));
    out.push(attempt("lambda roots at beta = 1/3", || {
        let p = lambda_pair(1.0 / 3.0)?;
        let ok = (p.lambda1 - 0.220).abs() <= 1e-3 && (p.lambda2 - 0.538).abs() <= 1e-3;
        Ok((ok, format!("({:.5}, {:.5})", p.lambda1, p.lambda2)))
    }));
    out.push(attempt("maxprob consistency without robustness", || {
        let a = maxprob_alpha(0.0)?;
        Ok(((a - 0.5801).abs() <= 5e-4, format!("alpha={a:.6}")))
    }));
    out.push(attempt("maxexp consistency at beta = 0.01", || {
        let (a, _) = max_alpha_for_beta(0.01, 300, 1e-4)?;
        Ok(((0.688..=0.693).contains(&a), format!("alpha={a:.5}")))
    }));
    out.push(attempt("maxexp first step at alpha = 0.6908", || {
        let s = solve_steps(0.6908, 0.01, 300)?;
        let t1 = s.theta_values[0];
        Ok(((t1 - 1.0165).abs() <= 0.01, format!("theta_1={t1:.5}")))
    }));
    out.push(attempt("secretary rate of dynkin rules", || {
        let u = Prior::uniform(0.0, 1.0)?;
        let mut ok = true;
        let mut detail = String::new();
        for lam in [0.2, 1.0 / E, 0.6] {
            let r = simulate(&u, &u, &dynkin_threshold(lam)?, 200, 100_000, 7)?;
            ok &= r.maxprob.agrees_with(neg_x_ln_x(lam), 0.0, 4.0);
            detail.push_str(&format!("λ={lam:.4}: {:.4} ± {:.4}; ", r.maxprob.value, r.maxprob.std_error));
        }
        Ok((ok, detail))
    }));
    out
}

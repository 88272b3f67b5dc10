//! Closed forms and quadrature evaluators for the competitive-ratio formulas.

use crate::error::{invalid, Result};
use crate::lambda::{bisect, lambda_pair, LambdaPair};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};
use crate::threshold::ThresholdFn;
use rayon::prelude::*;
use std::sync::OnceLock;

const SERIES_TERMS: usize = 60;

/// `sum_{k=1}^{60} c^k / (k! k)`; for `c < 1` the dropped tail is below 1e-60.
pub fn constant_c_series(c: f64) -> f64 {
    let mut term = 1.0; // c^k / k!
    let mut sum = 0.0;
    for k in 1..=SERIES_TERMS {
        term *= c / k as f64;
        sum += term / k as f64;
    }
    sum
}

/// The root of `sum_k c^k / (k! k) = 1`, about 0.80435.
pub fn solve_constant_c() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| bisect(|c| constant_c_series(c) - 1.0, 0.0, 1.0, 200))
}

fn inner_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_subintervals: 2000,
    }
}

fn outer_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-11,
        rel_tol: 0.0,
        max_subintervals: 2000,
    }
}

/// Best consistency of the robust MaxProb rule at robustness `beta`, in the
/// large-n limit.
pub fn maxprob_alpha(beta: f64) -> Result<f64> {
    let pair = lambda_pair(beta)?;
    Ok(maxprob_alpha_for_pair(&pair))
}

pub fn maxprob_alpha_for_pair(pair: &LambdaPair) -> f64 {
    if pair.lambda1 >= pair.lambda2 {
        return pair.beta;
    }
    let c = solve_constant_c();
    let inner = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let rate = c / (1.0 - s);
        integrate_with_breaks(|t| (-rate * t).exp() / t, s, 1.0, &[], &inner_spec())
    };
    pair.beta + integrate_with_breaks(inner, pair.lambda1, pair.lambda2, &[], &outer_spec())
}

/// `∫_a^b (1-t)^p dt`.
fn poly_mass(a: f64, b: f64, p: i32) -> f64 {
    ((1.0 - a).powi(p + 1) - (1.0 - b).powi(p + 1)) / (p + 1) as f64
}

/// Probability that the maximum of fixed values is accepted when arrivals
/// are uniform; `q` are the predicted cdf values of the sorted values.
pub fn googol_win_formula(q: &[f64], theta: &ThresholdFn) -> Result<f64> {
    if q.is_empty() {
        return invalid("need at least one value");
    }
    if q.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return invalid("cdf values must lie in [0, 1]");
    }
    if q.windows(2).any(|w| w[1] < w[0]) {
        return invalid("cdf values must be sorted");
    }
    let n = q.len();
    let start = theta.acceptance_onset(q[n - 1]);
    if start >= 1.0 {
        return Ok(0.0);
    }
    let mut total = poly_mass(start, 1.0, n as i32 - 1);
    for (i, &qi) in q[..n - 1].iter().enumerate() {
        // before its onset a value at rank i+1 is rejected when it is the prefix maximum
        let tau = theta.acceptance_onset(qi).max(start);
        let p = (n - 2 - i) as i32;
        let ramp = poly_mass(start, tau, p) - poly_mass(start, tau, p + 1);
        total += ramp + tau * poly_mass(tau, 1.0, p);
    }
    Ok(total)
}

/// `((1 - t + t v)^n - t v^n) / (t (1 - t))` without cancellation near `t = 1`.
fn gamma_integrand(n: i32, v: f64, t: f64) -> f64 {
    let u = 1.0 - v;
    let w = 1.0 - t;
    let vn = v.powi(n);
    // ((v + w u)^n - v^n) / w
    let lift = if w < 1e-8 {
        n as f64 * u * v.powi(n - 1)
    } else if v == 0.0 {
        u.powi(n) * w.powi(n - 1)
    } else {
        let r = w * u / v;
        if r > 1.0 {
            ((v + w * u).powi(n) - vn) / w
        } else {
            vn * (n as f64 * r.ln_1p()).exp_m1() / w
        }
    };
    (lift + vn) / t
}

/// Win probability of the rule with threshold `theta` when the predicted
/// prior is correct, for `n` values.
pub fn gamma_n(theta: &ThresholdFn, n: usize) -> Result<f64> {
    if n == 0 {
        return invalid("n must be positive");
    }
    let n = n as i32;
    let pieces: Vec<(f64, f64, f64)> = theta.pieces().collect();
    let total: f64 = pieces
        .par_iter()
        .map(|&(a, b, v)| {
            // s-integral over the piece folded into the weight min(t, b) - a
            let inner = integrate_with_breaks(
                |t| gamma_integrand(n, v, t) * (t.min(b) - a),
                a,
                1.0,
                &[b],
                &outer_spec(),
            );
            inner - v.powi(n) * (b - a)
        })
        .sum();
    Ok(total)
}

/// `Σ` over pieces of `|piece ∩ (lo, hi]| · f(level)`.
fn piece_sum(theta: &ThresholdFn, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for (a, b, v) in theta.pieces() {
        if a >= hi {
            break;
        }
        let len = b.min(hi) - a.max(lo);
        if len > 0.0 {
            acc += len * f(v);
        }
    }
    acc
}

/// `P[x_Alg >= ℓ]` for the rule `A(F, θ^(1/n))` with `y = F(ℓ)^n`.
pub fn maxexp_tail_prob(theta: &ThresholdFn, n: usize, y: f64) -> Result<f64> {
    if n == 0 {
        return invalid("n must be positive");
    }
    if !(0.0..=1.0).contains(&y) {
        return invalid(format!("y = {y} outside [0, 1]"));
    }
    let nf = n as f64;
    let e = n as i32 - 1;
    let roots: Vec<f64> = theta.values().iter().map(|v| v.powf(1.0 / nf)).collect();
    let breaks = theta.breaks().to_vec();
    // substitute q = r^n, which absorbs the q^(-(n-1)/n) weight
    let over_r = |r: f64| {
        let start = theta.generalized_inverse(r.powi(n as i32));
        let over_t = |t: f64| {
            let mut acc = 0.0;
            for ((a, b, _), &root) in theta.pieces().zip(&roots) {
                if a >= t {
                    break;
                }
                acc += (b.min(t) - a) * (1.0 - t + t * root.min(r)).powi(e);
            }
            acc / t
        };
        integrate_with_breaks(over_t, start, 1.0, &breaks, &inner_spec())
    };
    let r0 = y.powf(1.0 / nf);
    Ok(nf * integrate_with_breaks(over_r, r0, 1.0, &roots, &outer_spec()))
}

/// `g(q)`, the large-n acceptance weight of quantile level `q`.
pub fn g_of_q(theta: &ThresholdFn, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return invalid(format!("q = {q} outside (0, 1]"));
    }
    let start = theta.generalized_inverse(q);
    let f = |t: f64| piece_sum(theta, 0.0, t, |v| v.min(q).powf(t)) / (q * t);
    Ok(integrate_with_breaks(
        f,
        start,
        1.0,
        theta.breaks(),
        &inner_spec(),
    ))
}

/// `∫_a^b v^t / t dt`.
fn power_over_t(v: f64, a: f64, b: f64) -> f64 {
    if b <= a || v == 0.0 {
        return 0.0;
    }
    let lv = v.ln();
    integrate_with_breaks(|t| (t * lv).exp() / t, a, b, &[], &inner_spec())
}

/// `∫_a^b (t - a)/t · v^t dt`.
fn ramp_power(v: f64, a: f64, b: f64) -> f64 {
    if b <= a || v == 0.0 {
        return 0.0;
    }
    let lv = v.ln();
    integrate_with_breaks(
        |t| (t - a) / t * (t * lv).exp(),
        a,
        b,
        &[],
        &inner_spec(),
    )
}

/// Contribution of `s ∈ (a, b]` at level `v` to `L`: `∫_a^b ∫_s^1 v^t/t dt ds`.
fn piece_tail(v: f64, a: f64, b: f64) -> f64 {
    ramp_power(v, a, b) + (b - a) * power_over_t(v, b, 1.0)
}

/// `L(z) = ∫_z^1 ∫_0^t θ(max(s, z))^t / t ds dt`.
pub fn l_of_z(theta: &ThresholdFn, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return invalid(format!("z = {z} outside [0, 1]"));
    }
    let head = if z > 0.0 {
        z * power_over_t(theta.eval(z), z, 1.0)
    } else {
        0.0
    };
    let mut tail = 0.0;
    for (a, b, v) in theta.pieces() {
        if b > z {
            tail += piece_tail(v, a.max(z), b);
        }
    }
    Ok(head + tail)
}

/// Worst slack `min_z L(z) - α θ(z)` over `grid` evenly spaced points of
/// `[λ1, λ2]`; non-negative means the sufficient conditions for
/// α-consistency hold on the grid.
pub fn check_maxexp_conditions(
    theta: &ThresholdFn,
    alpha: f64,
    pair: &LambdaPair,
    grid: usize,
) -> Result<f64> {
    if grid == 0 {
        return invalid("grid must have at least one point");
    }
    let pieces: Vec<(f64, f64, f64)> = theta.pieces().collect();
    // suffix sums of the full-piece contributions
    let contrib: Vec<f64> = pieces
        .par_iter()
        .map(|&(a, b, v)| piece_tail(v, a, b))
        .collect();
    let mut suffix = vec![0.0; pieces.len() + 1];
    for j in (0..pieces.len()).rev() {
        suffix[j] = suffix[j + 1] + contrib[j];
    }
    let (l1, l2) = (pair.lambda1, pair.lambda2);
    let zs: Vec<f64> = (0..grid)
        .map(|i| {
            if grid == 1 {
                l1
            } else if i == grid - 1 {
                l2
            } else {
                l1 + (l2 - l1) * i as f64 / (grid - 1) as f64
            }
        })
        .collect();
    let worst = zs
        .par_iter()
        .map(|&z| {
            let j = pieces.partition_point(|&(_, b, _)| b < z);
            let level = theta.eval(z);
            let head = if z > 0.0 {
                z * power_over_t(level, z, 1.0)
            } else {
                0.0
            };
            let partial = match pieces.get(j) {
                Some(&(_, b, v)) => piece_tail(v, z, b) + suffix[j + 1],
                None => 0.0,
            };
            head + partial - alpha * level
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(worst)
}

//! Backward recursion for step thresholds meeting the MaxExp sufficient
//! conditions, and the outer search for the best consistency per robustness.

use crate::analytics::l_of_z;
use crate::error::{invalid, Error, Result};
use crate::lambda::{lambda_pair, LambdaPair};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};
use crate::threshold::ThresholdFn;
use rayon::prelude::*;
use std::f64::consts::E;

/// Consistency of the best MaxExp algorithm without a robustness requirement;
/// reported, not computed, at `β = 0`.
pub const LITERATURE_ALPHA_AT_ZERO: f64 = 0.745;

const BISECT_ITERS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct StepSolution {
    pub beta: f64,
    pub pair: LambdaPair,
    pub m: usize,
    /// Raw step values on `(z_i, z_{i+1}]`, possibly above 1. Steps near
    /// `λ2` can be far below the smallest double and then read as 0 here.
    pub theta_values: Vec<f64>,
    /// `ln θ_i`, the values the recursion actually solves for.
    pub log_theta_values: Vec<f64>,
    pub alpha: f64,
    pub feasible: bool,
}

impl StepSolution {
    /// Grid `z_1 = λ1, ..., z_{m+1} = λ2`.
    pub fn grid(&self) -> Vec<f64> {
        step_grid(&self.pair, self.m)
    }

    /// The robust threshold with step values clamped to at most 1.
    pub fn threshold(&self) -> Result<ThresholdFn> {
        let LambdaPair {
            lambda1: l1,
            lambda2: l2,
            ..
        } = self.pair;
        if self.theta_values.is_empty() {
            return crate::threshold::dynkin_threshold(l1);
        }
        let z = self.grid();
        let mut breaks = vec![l1];
        let mut values = vec![1.0];
        for (i, &v) in self.theta_values.iter().enumerate() {
            breaks.push(z[i + 1]);
            values.push(v.min(1.0));
        }
        if l2 < 1.0 {
            breaks.push(1.0);
            values.push(0.0);
        }
        ThresholdFn::new(breaks, values)
    }
}

fn step_grid(pair: &LambdaPair, m: usize) -> Vec<f64> {
    let (l1, l2) = (pair.lambda1, pair.lambda2);
    (0..=m)
        .map(|i| {
            if i == m {
                l2
            } else {
                l1 + (l2 - l1) * i as f64 / m as f64
            }
        })
        .collect()
}

fn spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_subintervals: 2000,
    }
}

/// `∫_z^1 θ^(-(1-t)) / t dt` with `lt = ln θ`.
fn scaled_power_integral(z: f64, lt: f64) -> f64 {
    integrate_with_breaks(|t| (-(1.0 - t) * lt).exp() / t, z, 1.0, &[], &spec())
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `ln ∫_a^b w(t) θ^t dt` with `lt = ln θ`, factoring out the largest `θ^t`.
fn log_weighted_power(lt: f64, a: f64, b: f64, w: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return f64::NEG_INFINITY;
    }
    let top = (a * lt).max(b * lt);
    top + integrate_with_breaks(|t| w(t) * (t * lt - top).exp(), a, b, &[], &spec()).ln()
}

/// `ln ∫_a^b ∫_s^1 θ^t / t dt ds`, the share of steps on `(a, b]` in `L`.
fn log_piece_tail(lt: f64, a: f64, b: f64) -> f64 {
    let ramp = log_weighted_power(lt, a, b, |t| (t - a) / t);
    let rest = (b - a).ln() + log_weighted_power(lt, b, 1.0, |t| 1.0 / t);
    log_add(ramp, rest)
}

/// Root of a decreasing `g` on the real line, bracketed by widening steps
/// around `guess`.
fn decreasing_root(g: impl Fn(f64) -> f64, guess: f64) -> Result<f64> {
    let (mut lo, mut hi) = (guess, guess);
    let mut step = 0.5;
    while g(lo) < 0.0 {
        lo -= step;
        step *= 2.0;
        if lo < -1e7 {
            return Err(Error::Numerical("no step value below the guess".into()));
        }
    }
    step = 0.5;
    while g(hi) > 0.0 {
        hi += step;
        step *= 2.0;
        if hi > 1e7 {
            return Err(Error::Numerical("no step value above the guess".into()));
        }
    }
    Ok(crate::lambda::bisect(g, lo, hi, BISECT_ITERS))
}

/// Defining equality of a step divided by its value:
/// `z ∫_z^1 θ^(-(1-t))/t dt + T/θ - α`, with `ln T = log_tail`, `ln θ = lt`.
pub fn step_residual(alpha: f64, z_next: f64, log_tail: f64, lt: f64) -> f64 {
    z_next * scaled_power_integral(z_next, lt) + (log_tail - lt).exp() - alpha
}

/// Step values from the backward recursion at consistency `alpha`.
pub fn solve_steps(alpha: f64, beta: f64, m: usize) -> Result<StepSolution> {
    if alpha.is_nan() || alpha <= 0.0 {
        return invalid("alpha must be positive");
    }
    if m < 2 {
        return invalid("grid must have at least 2 steps");
    }
    let pair = lambda_pair(beta)?;
    if pair.lambda2 >= 1.0 {
        return invalid("beta = 0 leaves no room after the last step");
    }
    if pair.lambda1 >= pair.lambda2 {
        return Ok(StepSolution {
            beta,
            pair,
            m,
            theta_values: Vec::new(),
            log_theta_values: Vec::new(),
            alpha,
            feasible: alpha <= 1.0 / E,
        });
    }
    let z = step_grid(&pair, m);
    let mut logs = vec![0.0; m];
    let mut log_tail = f64::NEG_INFINITY;
    let mut guess = 0.0;
    for i in (0..m).rev() {
        let zn = z[i + 1];
        let raw = decreasing_root(|lt| step_residual(alpha, zn, log_tail, lt), guess)?;
        let lt = if i + 1 < m && raw < logs[i + 1] {
            if logs[i + 1] - raw > 1e-12 * logs[i + 1].abs().max(1.0) {
                return Err(Error::Numerical(format!(
                    "step values increase at step {i}: ln θ {raw} < {}",
                    logs[i + 1]
                )));
            }
            logs[i + 1]
        } else {
            raw
        };
        logs[i] = lt;
        log_tail = log_add(log_tail, log_piece_tail(lt, z[i], z[i + 1]));
        guess = lt;
    }
    Ok(StepSolution {
        beta,
        pair,
        m,
        feasible: logs[0] >= 0.0,
        theta_values: logs.iter().map(|l| l.exp()).collect(),
        log_theta_values: logs,
        alpha,
    })
}

/// Largest α (to within `tol`) whose recursion still starts at or above 1.
pub fn max_alpha_for_beta(beta: f64, m: usize, tol: f64) -> Result<(f64, StepSolution)> {
    if tol.is_nan() || tol <= 0.0 {
        return invalid("tolerance must be positive");
    }
    let pair = lambda_pair(beta)?;
    if pair.lambda1 >= pair.lambda2 {
        let sol = solve_steps(pair.beta, beta, m.max(2))?;
        return Ok((sol.alpha, sol));
    }
    let mut lo = solve_steps(pair.beta.max(0.05), beta, m)?;
    while !lo.feasible {
        if lo.alpha < 1e-3 {
            return Err(Error::Numerical(format!(
                "no feasible consistency at beta = {beta}"
            )));
        }
        lo = solve_steps(0.5 * lo.alpha, beta, m)?;
    }
    let mut hi_alpha = 1.0;
    if solve_steps(hi_alpha, beta, m)?.feasible {
        return Err(Error::Numerical("consistency 1 reported feasible".into()));
    }
    while hi_alpha - lo.alpha > tol {
        let mid = 0.5 * (lo.alpha + hi_alpha);
        let sol = solve_steps(mid, beta, m)?;
        // a larger α must not start the recursion higher
        if sol.log_theta_values[0] > lo.log_theta_values[0] + 1e-9 {
            return Err(Error::Numerical(format!(
                "first step not monotone in alpha near {mid}"
            )));
        }
        if sol.feasible {
            lo = sol;
        } else {
            hi_alpha = mid;
        }
    }
    Ok((lo.alpha, lo))
}

/// How a curve point was obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveSource {
    Solved,
    /// Consistency-only value from the literature; the recursion excludes β = 0.
    Literature,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub beta: f64,
    pub alpha: Option<f64>,
    pub source: CurveSource,
}

/// `max_alpha_for_beta` over a grid; failures become gaps.
pub fn tradeoff_curve_maxexp(betas: &[f64], m: usize, tol: f64) -> Vec<CurvePoint> {
    betas
        .par_iter()
        .map(|&beta| {
            if beta == 0.0 {
                return CurvePoint {
                    beta,
                    alpha: Some(LITERATURE_ALPHA_AT_ZERO),
                    source: CurveSource::Literature,
                };
            }
            match max_alpha_for_beta(beta, m, tol) {
                Ok((alpha, _)) => CurvePoint {
                    beta,
                    alpha: Some(alpha),
                    source: CurveSource::Solved,
                },
                Err(e) => CurvePoint {
                    beta,
                    alpha: None,
                    source: CurveSource::Failed(e.to_string()),
                },
            }
        })
        .collect()
}

/// `L(z_{i+1}) - α θ_i` for every step, evaluated independently of the
/// recursion on the unclamped step function.
pub fn endpoint_residuals(sol: &StepSolution) -> Result<Vec<f64>> {
    if sol.theta_values.is_empty() {
        return Ok(Vec::new());
    }
    let z = sol.grid();
    // L(z) for z >= λ1 only sees θ on [z, 1], so the part before λ1 is dropped
    let mut breaks: Vec<f64> = z[1..].to_vec();
    let mut values = sol.theta_values.clone();
    if sol.pair.lambda2 < 1.0 {
        breaks.push(1.0);
        values.push(0.0);
    }
    let raw = ThresholdFn::new(breaks, values)?;
    (0..sol.theta_values.len())
        .into_par_iter()
        .map(|i| Ok(l_of_z(&raw, z[i + 1])? - sol.alpha * sol.theta_values[i]))
        .collect()
}

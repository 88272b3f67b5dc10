use crate::error::{invalid, Result};
use std::f64::consts::E;

/// The two roots of `-λ ln λ = β` around `1/e`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaPair {
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// `-x ln x` with `0 ln 0 = 0`.
pub fn neg_x_ln_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, a fixed number of halvings.
pub(crate) fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let f_lo_neg = f(lo) < 0.0;
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == f_lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn lambda_pair(beta: f64) -> Result<LambdaPair> {
    let peak = 1.0 / E;
    if beta.is_nan() || beta < 0.0 || beta > peak + 1e-15 {
        return invalid(format!("beta = {beta} outside [0, 1/e]"));
    }
    let beta = beta.min(peak);
    if beta == 0.0 {
        return Ok(LambdaPair {
            beta,
            lambda1: 0.0,
            lambda2: 1.0,
        });
    }
    if beta == peak {
        return Ok(LambdaPair {
            beta,
            lambda1: peak,
            lambda2: peak,
        });
    }
    let g = |x: f64| neg_x_ln_x(x) - beta;
    let lambda1 = bisect(g, 0.0, peak, 100);
    let lambda2 = bisect(g, peak, 1.0, 100);
    Ok(LambdaPair {
        beta,
        lambda1: lambda1.min(peak),
        lambda2: lambda2.max(peak),
    })
}

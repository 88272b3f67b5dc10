//! Left-continuous non-increasing step thresholds and the named constructions.

use crate::analytics::solve_constant_c;
use crate::error::{invalid, Error, Result};
use crate::lambda::{bisect, LambdaPair};
use crate::quadrature::{integrate, QuadratureSpec};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Acceptance test of a best-so-far value with predicted quantile `level`.
///
/// A zero threshold accepts every best-so-far value, including those with
/// predicted quantile zero (a predicted prior whose support misses the data).
pub fn accepts(level: f64, threshold: f64) -> bool {
    level > threshold || threshold == 0.0
}

/// Step function with value `values[i]` on `(breaks[i-1], breaks[i]]` and `θ(0) = values[0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdFn {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl ThresholdFn {
    /// Validates and merges adjacent pieces with equal values.
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return invalid("threshold needs equally many breakpoints and values");
        }
        if breaks[0] <= 0.0 || breaks.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("threshold breakpoints must be positive and strictly increasing");
        }
        if *breaks.last().unwrap() != 1.0 {
            return invalid("last threshold breakpoint must be 1");
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return invalid("threshold values must be finite and non-negative");
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return invalid("threshold values must be non-increasing");
        }
        let mut b = Vec::with_capacity(breaks.len());
        let mut v: Vec<f64> = Vec::with_capacity(values.len());
        for (&bi, &vi) in breaks.iter().zip(&values) {
            if v.last() == Some(&vi) {
                *b.last_mut().unwrap() = bi;
            } else {
                b.push(bi);
                v.push(vi);
            }
        }
        Ok(ThresholdFn {
            breaks: b,
            values: v,
        })
    }

    pub fn constant(v: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![v])
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(a, b, v)` for every piece `(a, b]`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.breaks.len()).map(move |i| {
            let a = if i == 0 { 0.0 } else { self.breaks[i - 1] };
            (a, self.breaks[i], self.values[i])
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.breaks.partition_point(|&b| b < t);
        self.values[i.min(self.values.len() - 1)]
    }

    /// `inf{t ∈ [0,1] : θ(t) < x}`, or 1 if θ never drops below `x`.
    pub fn generalized_inverse(&self, x: f64) -> f64 {
        self.first_time_where(|v| v < x)
    }

    /// Earliest time from which a value of predicted quantile `q` passes [`accepts`].
    pub fn acceptance_onset(&self, q: f64) -> f64 {
        self.first_time_where(|v| accepts(q, v))
    }

    fn first_time_where(&self, pred: impl Fn(f64) -> bool) -> f64 {
        match self.values.iter().position(|&v| pred(v)) {
            None => 1.0,
            Some(0) => 0.0,
            Some(i) => self.breaks[i - 1],
        }
    }

    /// 1 on `[0, λ1]`, θ clamped to `[0, 1]` on `(λ1, λ2]`, 0 on `(λ2, 1]`.
    pub fn robustify(&self, pair: &LambdaPair) -> ThresholdFn {
        let (l1, l2) = (pair.lambda1, pair.lambda2);
        let mut b = Vec::new();
        let mut v = Vec::new();
        if l1 > 0.0 {
            b.push(l1);
            v.push(1.0);
        }
        if l2 > l1 {
            for &x in self.breaks.iter().filter(|&&x| x > l1 && x < l2) {
                b.push(x);
                v.push(self.eval(x).min(1.0));
            }
            b.push(l2);
            v.push(self.eval(l2).min(1.0));
        }
        if l2 < 1.0 {
            b.push(1.0);
            v.push(0.0);
        }
        ThresholdFn::new(b, v).expect("robustified threshold is well formed")
    }

    /// Applies a non-decreasing map to every level.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<ThresholdFn> {
        ThresholdFn::new(self.breaks.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,theta\n");
        for (b, v) in self.breaks.iter().zip(&self.values) {
            let _ = writeln!(out, "{b:.16e},{v:.16e}");
        }
        out
    }

    /// Reads the `t,theta` format, skipping `#` comment lines.
    pub fn from_csv(text: &str) -> Result<ThresholdFn> {
        let mut b = Vec::new();
        let mut v = Vec::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
                continue;
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad threshold row {line:?}")))
            };
            let (t, th) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidInput(format!("bad threshold row {line:?}")))?;
            b.push(parse(t)?);
            v.push(parse(th)?);
        }
        ThresholdFn::new(b, v)
    }

    /// Parses `dynkin:λ`, `gm:n`, `single:n`, `const:v` or `file:path`;
    /// `gm_grid` is the grid size used for `gm`.
    pub fn parse(spec: &str, gm_grid: usize) -> Result<ThresholdFn> {
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("threshold spec {spec:?} lacks ':'")))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad parameter in {spec:?}")))
        };
        let count = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad count in {spec:?}")))
        };
        match kind.trim().to_ascii_lowercase().as_str() {
            "dynkin" => dynkin_threshold(num(arg)?),
            "gm" => gm_threshold(count(arg)?, gm_grid),
            "single" => single_threshold(count(arg)?),
            "const" => ThresholdFn::constant(num(arg)?),
            "file" => ThresholdFn::from_csv(&std::fs::read_to_string(arg)?),
            other => invalid(format!("unknown threshold family {other:?}")),
        }
    }
}

/// 1 on `[0, λ]` and 0 afterwards.
pub fn dynkin_threshold(lambda: f64) -> Result<ThresholdFn> {
    if !(0.0..=1.0).contains(&lambda) {
        return invalid(format!("switch time {lambda} outside [0, 1]"));
    }
    if lambda == 0.0 {
        ThresholdFn::constant(0.0)
    } else if lambda == 1.0 {
        ThresholdFn::constant(1.0)
    } else {
        ThresholdFn::new(vec![lambda, 1.0], vec![1.0, 0.0])
    }
}

/// The constant `1 - 1/n`.
pub fn single_threshold(n: usize) -> Result<ThresholdFn> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    ThresholdFn::constant(1.0 - 1.0 / n as f64)
}

fn foc_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-12,
        rel_tol: 1e-14,
        max_subintervals: 200,
    }
}

/// `∫_0^w ((1 + x u)^(n-1) - 1) / u du`, the first-order integral after
/// substituting `u = 1 - t` and `x = 1/θ - 1`.
fn foc_integral(n: usize, w: f64, x: f64) -> f64 {
    let k = (n - 1) as f64;
    let f = |u: f64| {
        if u == 0.0 {
            k * x
        } else {
            (k * (x * u).ln_1p()).exp_m1() / u
        }
    };
    integrate(f, 0.0, w, &foc_spec())
}

/// Residual of the optimality condition `∫_s^1 (((1-t)/θ + t)^(n-1) - 1)/(1-t) dt - 1`.
pub fn gm_foc_residual(n: usize, s: f64, theta: f64) -> f64 {
    foc_integral(n, 1.0 - s, 1.0 / theta - 1.0) - 1.0
}

/// The optimal full-information level `θ*_n(s)`; zero at `s = 1`.
pub fn gm_level(n: usize, s: f64) -> Result<f64> {
    if n < 2 {
        return invalid("the optimal level needs n >= 2");
    }
    if !(0.0..=1.0).contains(&s) {
        return invalid(format!("time {s} outside [0, 1]"));
    }
    if s == 1.0 {
        return Ok(0.0);
    }
    let w = 1.0 - s;
    // (1+xu)^(n-1) - 1 >= (n-1) x u bounds the root from above
    let x_hi = 1.0 / ((n - 1) as f64 * w);
    let x = bisect(|x| foc_integral(n, w, x) - 1.0, 0.0, x_hi, 100);
    Ok(1.0 / (1.0 + x))
}

/// `θ*_n` sampled on the grid `s_j = j/(m-1)`; the piece `(s_{j-1}, s_j]` takes the
/// level at its left end, so the step dominates `θ*_n` and stays positive.
pub fn gm_threshold(n: usize, m: usize) -> Result<ThresholdFn> {
    if n < 2 {
        return invalid("the optimal threshold needs n >= 2");
    }
    if m < 2 {
        return invalid("grid size must be at least 2");
    }
    let h = 1.0 / (m - 1) as f64;
    let values: Vec<f64> = (0..m - 1)
        .into_par_iter()
        .map(|j| gm_level(n, j as f64 * h))
        .collect::<Result<_>>()?;
    let breaks: Vec<f64> = (1..m)
        .map(|j| if j == m - 1 { 1.0 } else { j as f64 * h })
        .collect();
    ThresholdFn::new(breaks, values)
}

/// Large-n approximation `1 / (1 + c / ((n-1)(1-s)))`.
pub fn gm_asymptotic(s: f64, n: usize, c: f64) -> Result<f64> {
    if n < 2 {
        return invalid("n must be at least 2");
    }
    if !(0.0..1.0).contains(&s) {
        return invalid(format!("time {s} outside [0, 1)"));
    }
    Ok(1.0 / (1.0 + c / ((n - 1) as f64 * (1.0 - s))))
}

/// [`gm_asymptotic`] with the constant from [`solve_constant_c`].
pub fn gm_asymptotic_default(s: f64, n: usize) -> Result<f64> {
    gm_asymptotic(s, n, solve_constant_c())
}

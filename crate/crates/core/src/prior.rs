//! Value distributions, used both as the real prior and as the predicted one.

use crate::error::{invalid, Error, Result};
use rand::Rng;
use std::path::Path;

/// Distribution over `{1, .., K}` stored as raw weights so that truncation is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePrior {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscretePrior {
    /// Builds from a pmf; entries must be non-negative and sum to one within 1e-12.
    pub fn from_pmf(pmf: &[f64]) -> Result<Self> {
        if pmf.is_empty() {
            return invalid("empty pmf");
        }
        if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return invalid("pmf entries must be finite and non-negative");
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("pmf sums to {total}, not 1"));
        }
        Ok(Self::from_weights_unchecked(pmf.to_vec()))
    }

    fn from_weights_unchecked(weights: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        DiscretePrior {
            weights,
            cumulative,
        }
    }

    /// Harmonic pmf `f(k) ∝ 1/k` on `{1, .., K}`.
    pub fn harmonic(k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("support size must be positive");
        }
        let raw: Vec<f64> = (1..=k).map(|i| 1.0 / i as f64).collect();
        let h: f64 = raw.iter().sum();
        Ok(Self::from_weights_unchecked(
            raw.into_iter().map(|w| w / h).collect(),
        ))
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Probability of value `l` (1-based).
    pub fn pmf(&self, l: usize) -> f64 {
        if l == 0 || l > self.weights.len() {
            0.0
        } else {
            self.weights[l - 1] / self.total()
        }
    }

    pub fn pmf_vec(&self) -> Vec<f64> {
        (1..=self.support_size()).map(|l| self.pmf(l)).collect()
    }

    /// `F(l)` for an integer `l`; 0 below the support and 1 above.
    pub fn cdf_at(&self, l: usize) -> f64 {
        if l == 0 {
            0.0
        } else if l >= self.weights.len() {
            1.0
        } else {
            self.cumulative[l - 1] / self.total()
        }
    }

    /// `F(l-1) / F(l)` computed from partial sums, free of underflow.
    pub fn cdf_ratio(&self, l: usize) -> f64 {
        if l <= 1 {
            0.0
        } else {
            self.cumulative[l - 2] / self.cumulative[l - 1]
        }
    }

    /// Smallest `l` with `F(l) >= q`.
    pub fn quantile_index(&self, q: f64) -> usize {
        let target = q * self.total();
        let i = self.cumulative.partition_point(|&c| c < target);
        (i + 1).min(self.weights.len())
    }

    /// Conditional distribution on `{1, .., k}`.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.weights.len() {
            return invalid(format!("truncation point {k} outside 1..={}", self.weights.len()));
        }
        if self.cumulative[k - 1] <= 0.0 {
            return invalid(format!("no mass at or below {k}"));
        }
        Ok(Self::from_weights_unchecked(self.weights[..k].to_vec()))
    }
}

/// Piecewise-linear cdf through `(x_i, p_i)` knots.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileTable {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl QuantileTable {
    pub fn new(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ps.len() {
            return invalid("quantile table needs at least two (x, p) knots");
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) || xs.iter().any(|x| !x.is_finite()) {
            return invalid("quantile table values must be finite and strictly increasing");
        }
        if ps.windows(2).any(|w| w[1] < w[0]) || ps[0] != 0.0 || *ps.last().unwrap() != 1.0 {
            return invalid("quantile table probabilities must rise from 0 to 1");
        }
        Ok(QuantileTable { xs, ps })
    }

    fn cdf(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|&v| v <= x);
        if i == 0 {
            return 0.0;
        }
        if i == self.xs.len() {
            return 1.0;
        }
        let (x0, x1, p0, p1) = (self.xs[i - 1], self.xs[i], self.ps[i - 1], self.ps[i]);
        p0 + (p1 - p0) * (x - x0) / (x1 - x0)
    }

    fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return self.xs[0];
        }
        let i = self.ps.partition_point(|&p| p < q);
        if i == 0 {
            return self.xs[0];
        }
        let i = i.min(self.ps.len() - 1);
        let (x0, x1, p0, p1) = (self.xs[i - 1], self.xs[i], self.ps[i - 1], self.ps[i]);
        x0 + (x1 - x0) * (q - p0) / (p1 - p0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Prior {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    QuantileTable(QuantileTable),
    /// The distribution with cdf `F^(1/k)`; the max of `k` draws from it follows `F`.
    PowerRoot { base: Box<Prior>, k: u32 },
    Discrete(DiscretePrior),
}

impl Prior {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!("uniform needs finite lo < hi, got ({lo}, {hi})"));
        }
        Ok(Prior::Uniform { lo, hi })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return invalid(format!("exponential rate must be positive, got {rate}"));
        }
        Ok(Prior::Exponential { rate })
    }

    pub fn discrete(pmf: &[f64]) -> Result<Self> {
        Ok(Prior::Discrete(DiscretePrior::from_pmf(pmf)?))
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Prior::Discrete(_))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Prior::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Prior::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Prior::QuantileTable(t) => t.cdf(x),
            Prior::PowerRoot { base, k } => {
                let c = base.cdf(x);
                if *k == 1 {
                    c
                } else {
                    c.powf(1.0 / *k as f64)
                }
            }
            Prior::Discrete(d) => {
                if x < 1.0 {
                    0.0
                } else {
                    d.cdf_at(x.floor().min(usize::MAX as f64) as usize)
                }
            }
        }
    }

    /// Right-continuous inverse `inf{x : F(x) >= q}`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return invalid(format!("quantile level {q} outside [0, 1]"));
        }
        Ok(self.quantile_unchecked(q))
    }

    fn quantile_unchecked(&self, q: f64) -> f64 {
        match self {
            Prior::Uniform { lo, hi } => lo + q * (hi - lo),
            Prior::Exponential { rate } => -(-q).ln_1p() / rate,
            Prior::QuantileTable(t) => t.quantile(q),
            Prior::PowerRoot { base, k } => base.quantile_unchecked(q.powi(*k as i32)),
            Prior::Discrete(d) => d.quantile_index(q) as f64,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile_unchecked(u)
    }

    /// Prior whose cdf is `cdf^(1/k)`.
    pub fn power_root(&self, k: u32) -> Result<Prior> {
        if k == 0 {
            return invalid("power root order must be positive");
        }
        if self.is_discrete() {
            return invalid("power root is defined for continuous priors only");
        }
        if k == 1 {
            return Ok(self.clone());
        }
        Ok(match self {
            Prior::PowerRoot { base, k: j } => Prior::PowerRoot {
                base: base.clone(),
                k: j * k,
            },
            other => Prior::PowerRoot {
                base: Box::new(other.clone()),
                k,
            },
        })
    }

    /// The conditional prior on `{1, .., k}` of a discrete prior.
    pub fn truncate_conditional(&self, k: usize) -> Result<Prior> {
        match self {
            Prior::Discrete(d) => Ok(Prior::Discrete(d.truncate(k)?)),
            _ => invalid("truncation is defined for discrete priors only"),
        }
    }

    /// Parses `uniform:a,b`, `exp:rate`, `harmonic:K`, `pmf:FILE_OR_LIST`, `table:FILE`.
    pub fn parse(spec: &str) -> Result<Prior> {
        let (kind, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("prior spec {spec:?} lacks ':'")))?;
        let nums = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("bad number {p:?} in {spec:?}")))
                })
                .collect()
        };
        match kind.trim().to_ascii_lowercase().as_str() {
            "uniform" => match nums(args)?.as_slice() {
                [a, b] => Prior::uniform(*a, *b),
                _ => invalid("uniform takes two parameters: uniform:a,b"),
            },
            "exp" | "exponential" => match nums(args)?.as_slice() {
                [r] => Prior::exponential(*r),
                _ => invalid("exp takes one parameter: exp:rate"),
            },
            "harmonic" => {
                let k: usize = args
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad support size {args:?}")))?;
                Ok(Prior::Discrete(DiscretePrior::harmonic(k)?))
            }
            "pmf" => {
                let text = if Path::new(args).is_file() {
                    std::fs::read_to_string(args)?
                } else {
                    args.to_string()
                };
                let flat = text.replace(['\n', '\r', ';'], ",");
                let parts: Vec<&str> = flat.split(',').filter(|p| !p.trim().is_empty()).collect();
                Prior::discrete(&nums(&parts.join(","))?)
            }
            "table" => {
                let text = std::fs::read_to_string(args)?;
                let (mut xs, mut ps) = (Vec::new(), Vec::new());
                for line in text.lines().map(str::trim) {
                    if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
                        continue;
                    }
                    match nums(line)?.as_slice() {
                        [x, p] => {
                            xs.push(*x);
                            ps.push(*p);
                        }
                        _ => return invalid(format!("table row {line:?} is not `x,p`")),
                    }
                }
                Ok(Prior::QuantileTable(QuantileTable::new(xs, ps)?))
            }
            other => invalid(format!("unknown prior family {other:?}")),
        }
    }
}

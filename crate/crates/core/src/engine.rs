//! Per-instance execution of the threshold rules and the Monte Carlo harness.

use crate::error::{invalid, Result};
use crate::prior::Prior;
use crate::threshold::{accepts, ThresholdFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub values: Vec<f64>,
    pub arrival_times: Option<Vec<f64>>,
}

impl Instance {
    pub fn new(values: Vec<f64>, arrival_times: Option<Vec<f64>>) -> Result<Self> {
        if let Some(times) = &arrival_times {
            if times.len() != values.len() {
                return invalid(format!(
                    "{} values but {} arrival times",
                    values.len(),
                    times.len()
                ));
            }
            let mut sorted = times.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return invalid("arrival times must be pairwise distinct");
            }
        }
        Ok(Instance {
            values,
            arrival_times,
        })
    }

    /// Discrete-time adapter: sorted uniform draws become the arrival times of
    /// the values in their given order.
    pub fn with_uniform_times<R: Rng + ?Sized>(values: Vec<f64>, rng: &mut R) -> Self {
        let times = sorted_uniforms(values.len(), rng);
        Instance {
            values,
            arrival_times: Some(times),
        }
    }

    /// `n` i.i.d. values from `real`, listed in arrival order.
    pub fn sample<R: Rng + ?Sized>(real: &Prior, n: usize, rng: &mut R) -> Self {
        let values = (0..n).map(|_| real.sample(rng)).collect();
        Self::with_uniform_times(values, rng)
    }

    fn time_order(&self) -> Result<Vec<usize>> {
        let Some(times) = &self.arrival_times else {
            return invalid("instance has no arrival times");
        };
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        Ok(order)
    }
}

fn sorted_uniforms<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut t: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    t.sort_by(f64::total_cmp);
    t
}

/// Independent generator for one trial, reproducible from `(seed, trial)`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One streaming pass over `(index, time, value)` in time order: returns the
/// first best-so-far value whose level passes the threshold at its time.
pub fn first_acceptance(
    arrivals: impl IntoIterator<Item = (usize, f64, f64)>,
    level: impl Fn(f64) -> f64,
    theta: &ThresholdFn,
) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    for (i, t, x) in arrivals {
        if x >= best {
            best = x;
            if accepts(level(x), theta.eval(t)) {
                return Some(i);
            }
        }
    }
    None
}

/// `F̃(x)^(1/k)` without building a new prior; works for discrete priors too.
fn root_level(predicted: &Prior, k: usize, x: f64) -> f64 {
    let c = predicted.cdf(x);
    if k == 1 {
        c
    } else {
        c.powf(1.0 / k as f64)
    }
}

/// The bi-criteria rule: index of the accepted value, if any.
pub fn run_bicriteria(
    inst: &Instance,
    predicted: &Prior,
    theta: &ThresholdFn,
) -> Result<Option<usize>> {
    let order = inst.time_order()?;
    let times = inst.arrival_times.as_ref().unwrap();
    Ok(first_acceptance(
        order.into_iter().map(|i| (i, times[i], inst.values[i])),
        |x| predicted.cdf(x),
        theta,
    ))
}

/// Whether no value arriving strictly before `t` is accepted, decided from the
/// prefix maximum alone: none exists, or its level fails the threshold at its
/// own arrival time (the latest arrival among tied maxima).
pub fn rejects_all_before(
    inst: &Instance,
    predicted: &Prior,
    theta: &ThresholdFn,
    t: f64,
) -> Result<bool> {
    let order = inst.time_order()?;
    let times = inst.arrival_times.as_ref().unwrap();
    let mut prefix: Option<(f64, f64)> = None;
    for i in order {
        if times[i] >= t {
            break;
        }
        if prefix.is_none_or(|(y, _)| inst.values[i] >= y) {
            prefix = Some((inst.values[i], times[i]));
        }
    }
    Ok(match prefix {
        None => true,
        Some((y, s)) => !accepts(predicted.cdf(y), theta.eval(s)),
    })
}

/// The rule with implicit sharding into `k` virtual shards per value; `values`
/// are in arrival order.
pub fn run_sharding<R: Rng + ?Sized>(
    values: &[f64],
    k: usize,
    predicted: &Prior,
    theta: &ThresholdFn,
    rng: &mut R,
) -> Result<Option<usize>> {
    if k == 0 {
        return invalid("shard count must be positive");
    }
    let n = values.len();
    let times = sorted_uniforms(n * k, rng);
    let s: Vec<f64> = (0..n).map(|i| times[i * k + rng.random_range(0..k)]).collect();
    Ok(first_acceptance(
        (0..n).map(|i| (i, s[i], values[i])),
        |x| root_level(predicted, k, x),
        theta,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_samples(xs: impl Iterator<Item = f64> + Clone) -> Self {
        let n = xs.clone().count() as f64;
        let mean = xs.clone().sum::<f64>() / n;
        let var = if n > 1.0 {
            xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }

    /// Whether `other` lies within `z` combined standard errors.
    pub fn agrees_with(&self, other: f64, other_se: f64, z: f64) -> bool {
        (self.value - other).abs() <= z * (self.std_error.powi(2) + other_se.powi(2)).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub trials: usize,
    pub maxprob: Estimate,
    pub maxexp_ratio: Estimate,
    pub acceptance_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub accepted: Option<f64>,
    pub max: f64,
}

impl TrialOutcome {
    pub fn won(&self) -> bool {
        self.accepted.is_some_and(|v| v >= self.max)
    }
}

/// Raw per-trial outcomes in trial order.
pub fn simulate_outcomes(
    real: &Prior,
    predicted: &Prior,
    theta: &ThresholdFn,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialOutcome>> {
    if trials == 0 || n == 0 {
        return invalid("need at least one trial and one value");
    }
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let values: Vec<f64> = (0..n).map(|_| real.sample(&mut rng)).collect();
            let times = sorted_uniforms(n, &mut rng);
            let hit = first_acceptance(
                (0..n).map(|i| (i, times[i], values[i])),
                |x| predicted.cdf(x),
                theta,
            );
            TrialOutcome {
                accepted: hit.map(|i| values[i]),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect())
}

pub fn summarize(outcomes: &[TrialOutcome]) -> SimReport {
    let n = outcomes.len() as f64;
    let maxprob = Estimate::from_samples(outcomes.iter().map(|o| if o.won() { 1.0 } else { 0.0 }));
    let alg = Estimate::from_samples(outcomes.iter().map(|o| o.accepted.unwrap_or(0.0)));
    let opt = Estimate::from_samples(outcomes.iter().map(|o| o.max));
    let ratio = alg.value / opt.value;
    // delta method for the ratio of two correlated means
    let cov = if n > 1.0 {
        outcomes
            .iter()
            .map(|o| (o.accepted.unwrap_or(0.0) - alg.value) * (o.max - opt.value))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    let var_a = alg.std_error.powi(2) * n;
    let var_o = opt.std_error.powi(2) * n;
    let var_r = (var_a - 2.0 * ratio * cov + ratio * ratio * var_o) / (opt.value * opt.value * n);
    let acceptance_rate = outcomes.iter().filter(|o| o.accepted.is_some()).count() as f64 / n;
    SimReport {
        trials: outcomes.len(),
        maxprob,
        maxexp_ratio: Estimate {
            value: ratio,
            std_error: var_r.max(0.0).sqrt(),
        },
        acceptance_rate,
    }
}

/// Monte Carlo estimate of both objectives with values drawn from `real`.
pub fn simulate(
    real: &Prior,
    predicted: &Prior,
    theta: &ThresholdFn,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<SimReport> {
    Ok(summarize(&simulate_outcomes(
        real, predicted, theta, n, trials, seed,
    )?))
}

/// Runs the sharded rule on the `n` block maxima and the plain rule with
/// `F̃^(1/k)` on the `nk` shards, under the shared coupling; counts the trials
/// where the sharded rule ends with a strictly smaller accepted value.
#[allow(clippy::too_many_arguments)]
pub fn simulate_coupled_sharding(
    real: &Prior,
    predicted: &Prior,
    theta: &ThresholdFn,
    n: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<usize> {
    if k == 0 {
        return invalid("shard count must be positive");
    }
    let shard_prior = real.power_root(k as u32)?;
    let violations = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let shards: Vec<f64> = (0..n * k).map(|_| shard_prior.sample(&mut rng)).collect();
            let times = sorted_uniforms(n * k, &mut rng);
            let mut block_max = Vec::with_capacity(n);
            let mut block_time = Vec::with_capacity(n);
            for i in 0..n {
                let j = (i * k..(i + 1) * k)
                    .max_by(|&a, &b| shards[a].total_cmp(&shards[b]))
                    .unwrap();
                block_max.push(shards[j]);
                block_time.push(times[j]);
            }
            let level = |x: f64| root_level(predicted, k, x);
            let sharded = first_acceptance(
                (0..n).map(|i| (i, block_time[i], block_max[i])),
                level,
                theta,
            )
            .map(|i| block_max[i]);
            let full = first_acceptance((0..n * k).map(|j| (j, times[j], shards[j])), level, theta)
                .map(|j| shards[j]);
            match (sharded, full) {
                (_, None) => 0usize,
                (None, Some(_)) => 1,
                (Some(a), Some(b)) => usize::from(a < b),
            }
        })
        .sum();
    Ok(violations)
}

/// Probability over uniform arrival orders that the maximum of fixed sorted
/// distinct `values` is accepted.
pub fn googol_win_mc(
    values: &[f64],
    predicted: &Prior,
    theta: &ThresholdFn,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    if values.is_empty() || trials == 0 {
        return invalid("need at least one value and one trial");
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("values must be sorted and distinct");
    }
    let n = values.len();
    let wins: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let times: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
            let hit = first_acceptance(
                order.into_iter().map(|i| (i, times[i], values[i])),
                |x| predicted.cdf(x),
                theta,
            );
            if hit == Some(n - 1) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(Estimate::from_samples(wins.iter().copied()))
}

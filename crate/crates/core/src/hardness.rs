//! Factor-revealing LP over minor-oblivious rules for MaxProb on a discrete
//! predicted prior, with the rule conversions and a brute-force oracle.
//!
//! Rows are stored scaled by `F̃(ℓ)^t` so no power of the cdf is ever formed:
//! with `r(ℓ) = F̃(ℓ-1)/F̃(ℓ)` and `d(t, ℓ) = 1 - r(ℓ)^t` we have
//! `Δ^t(ℓ) = F̃(ℓ)^t d(t, ℓ)`, and the prefix sums become
//! `p_{t,ℓ} = r^t p_{t,ℓ-1} + d(t,ℓ) y_{t,ℓ}`.

use crate::error::{invalid, Error, Result};
use crate::prior::{DiscretePrior, Prior};
use lp::{Cmp, LpError, Problem, Sense, Simplex, SimplexOptions};

pub fn harmonic_prior(k: usize) -> Result<Prior> {
    Ok(Prior::Discrete(DiscretePrior::harmonic(k)?))
}

/// `Δ^t(ℓ) = F̃(ℓ)^t - F̃(ℓ-1)^t` for `t = 0..=n`, indexed `[t][ℓ-1]`, with
/// `Δ^0(ℓ) = 1{ℓ = 1}`.
pub fn delta_table(prior: &DiscretePrior, n: usize) -> Vec<Vec<f64>> {
    let k = prior.support_size();
    (0..=n)
        .map(|t| {
            (1..=k)
                .map(|l| {
                    if t == 0 {
                        if l == 1 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        prior.cdf_at(l).powi(t as i32) - prior.cdf_at(l - 1).powi(t as i32)
                    }
                })
                .collect()
        })
        .collect()
}

/// `1 - r^t`, and `1{ℓ=1}` at `t = 0`.
fn dhat(prior: &DiscretePrior, t: usize, l: usize) -> f64 {
    if t == 0 {
        return if l == 1 { 1.0 } else { 0.0 };
    }
    let r = prior.cdf_ratio(l);
    if r == 0.0 {
        1.0
    } else {
        -(t as f64 * r.ln()).exp_m1()
    }
}

fn check_positive(prior: &DiscretePrior) -> Result<()> {
    if (1..=prior.support_size()).any(|l| prior.pmf(l) <= 0.0) {
        return invalid("the predicted pmf must be strictly positive");
    }
    Ok(())
}

/// Row counts by family. Box constraints and the initial condition are
/// carried as variable bounds; the counts say how many rows they stand for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstraintCounts {
    pub initial: usize,
    pub box_bounds: usize,
    pub sandwich: usize,
    pub consistency: usize,
    pub robustness: usize,
    /// Defining equalities of the prefix-sum and win-probability variables.
    pub auxiliary: usize,
}

#[derive(Clone, Debug)]
pub struct PolytopeModel {
    pub n: usize,
    pub prior: DiscretePrior,
    pub lambda: f64,
    pub problem: Problem,
    /// `y[t][ℓ-1]` for `t = 0..=n`.
    pub y: Vec<Vec<usize>>,
    /// `p[t][ℓ-1]` for `t = 1..n-1`; row 0 is empty.
    pub p: Vec<Vec<usize>>,
    /// `w[k-1]`: win probability under the prior truncated at `k`.
    pub w: Vec<usize>,
    pub alpha: usize,
    pub beta: usize,
    pub counts: ConstraintCounts,
}

impl PolytopeModel {
    pub fn support_size(&self) -> usize {
        self.prior.support_size()
    }

    fn objective_coefficients(&self, lambda: f64) -> Vec<f64> {
        let mut c = vec![0.0; self.problem.num_variables()];
        c[self.alpha] = lambda;
        c[self.beta] = 1.0 - lambda;
        c
    }
}

pub fn build_polytope(n: usize, prior: &DiscretePrior, lambda: f64) -> Result<PolytopeModel> {
    if n == 0 {
        return invalid("n must be positive");
    }
    if !(0.0..=1.0).contains(&lambda) {
        return invalid(format!("objective weight {lambda} outside [0, 1]"));
    }
    check_positive(prior)?;
    let kk = prior.support_size();
    let inf = f64::INFINITY;
    let mut pb = Problem::new(format!("maxprob_n{n}_k{kk}"), Sense::Maximize);

    let mut y = Vec::with_capacity(n + 1);
    for t in 0..=n {
        let lo = if t == 0 { 1.0 } else { 0.0 };
        y.push(
            (1..=kk)
                .map(|l| pb.add_variable(format!("y_{t}_{l}"), lo, 1.0))
                .collect::<Vec<_>>(),
        );
    }
    let mut p = vec![Vec::new()];
    for t in 1..n {
        p.push(
            (1..=kk)
                .map(|l| pb.add_variable(format!("p_{t}_{l}"), -inf, inf))
                .collect::<Vec<_>>(),
        );
    }
    let w: Vec<usize> = (1..=kk)
        .map(|k| pb.add_variable(format!("w_{k}"), -inf, inf))
        .collect();
    let alpha = pb.add_variable("alpha", -inf, inf);
    let beta = pb.add_variable("beta", -inf, inf);
    pb.set_objective(alpha, lambda);
    pb.set_objective(beta, 1.0 - lambda);

    // scaled prefix sum at t-1; at t-1 = 0 it is y_{0,1}
    let prefix = |t: usize, l: usize| if t == 0 { y[0][0] } else { p[t][l - 1] };
    let mut counts = ConstraintCounts {
        initial: kk,
        box_bounds: 2 * n * kk,
        sandwich: 0,
        consistency: 0,
        robustness: 0,
        auxiliary: 0,
    };

    for t in 1..=n {
        for l in 1..=kk {
            let r = prior.cdf_ratio(l);
            let step = prior.pmf(l) / prior.cdf_at(l);
            let core = [
                (y[t][l - 1], dhat(prior, t, l)),
                (y[t - 1][l - 1], -dhat(prior, t - 1, l) * r),
            ];
            pb.add_constraint(format!("lo_{t}_{l}"), core.to_vec(), Cmp::Ge, 0.0);
            let mut upper = core.to_vec();
            upper.push((prefix(t - 1, l), -step));
            pb.add_constraint(format!("up_{t}_{l}"), upper, Cmp::Le, 0.0);
            counts.sandwich += 2;
        }
    }
    for t in 1..n {
        for l in 1..=kk {
            let mut terms = vec![
                (p[t][l - 1], 1.0),
                (y[t][l - 1], -dhat(prior, t, l)),
            ];
            if l > 1 {
                let r = prior.cdf_ratio(l);
                terms.push((p[t][l - 2], -r.powi(t as i32)));
            }
            pb.add_constraint(format!("pdef_{t}_{l}"), terms, Cmp::Eq, 0.0);
            counts.auxiliary += 1;
        }
    }
    for k in 1..=kk {
        let r = prior.cdf_ratio(k);
        let step = prior.pmf(k) / prior.cdf_at(k);
        let mut terms = vec![(w[k - 1], 1.0)];
        if k > 1 {
            terms.push((w[k - 2], -r.powi(n as i32)));
        }
        for t in 1..=n {
            terms.push((prefix(t - 1, k), -step));
            terms.push((y[t - 1][k - 1], -dhat(prior, t - 1, k) * r));
            terms.push((y[t][k - 1], dhat(prior, t, k)));
        }
        pb.add_constraint(format!("wdef_{k}"), terms, Cmp::Eq, 0.0);
        counts.auxiliary += 1;
    }
    pb.add_constraint(
        "consistency",
        vec![(w[kk - 1], 1.0), (alpha, -1.0)],
        Cmp::Ge,
        0.0,
    );
    counts.consistency = 1;
    // the k = K row is left out; with K = 1 it is the only bound on beta
    let robust_rows = if kk == 1 { 1..=1 } else { 1..=kk - 1 };
    for k in robust_rows {
        pb.add_constraint(
            format!("robust_{k}"),
            vec![(w[k - 1], 1.0), (beta, -1.0)],
            Cmp::Ge,
            0.0,
        );
        counts.robustness += 1;
    }
    Ok(PolytopeModel {
        n,
        prior: prior.clone(),
        lambda,
        problem: pb,
        y,
        p,
        w,
        alpha,
        beta,
        counts,
    })
}

fn check_table(table: &[Vec<f64>], rows: usize, k: usize, what: &str) -> Result<()> {
    if table.len() != rows || table.iter().any(|r| r.len() != k) {
        return invalid(format!("{what} table must be {rows} x {k}"));
    }
    if table.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
        return invalid(format!("{what} entries must lie in [0, 1]"));
    }
    Ok(())
}

/// Win probability under the prior truncated at `k`, evaluated from a
/// rejection table `rej[t][ℓ-1]` (`t = 0..=n`) in the unscaled form.
pub fn win_prob_from_rej(prior: &DiscretePrior, n: usize, rej: &[Vec<f64>], k: usize) -> Result<f64> {
    let kk = prior.support_size();
    check_table(rej, n + 1, kk, "rejection")?;
    if k == 0 || k > kk {
        return invalid(format!("truncation point {k} outside 1..={kk}"));
    }
    let delta = delta_table(prior, n);
    let fk = prior.cdf_at(k);
    let mut total = 0.0;
    for t in 1..=n {
        for l in 1..=k {
            let below: f64 = (1..=l)
                .map(|m| delta[t - 1][m - 1] * rej[t - 1][m - 1])
                .sum::<f64>()
                * prior.pmf(l);
            let bracket = below + delta[t - 1][l - 1] * prior.cdf_at(l - 1) * rej[t - 1][l - 1]
                - delta[t][l - 1] * rej[t][l - 1];
            total += (prior.cdf_at(l) / fk).powi((n - t) as i32) / fk.powi(t as i32) * bracket;
        }
    }
    Ok(total)
}

/// The model's variable vector at the point given by a rejection table, with
/// `α` and `β` set to the largest values the rows allow.
pub fn point_from_rej(model: &PolytopeModel, rej: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = model.n;
    let kk = model.support_size();
    check_table(rej, n + 1, kk, "rejection")?;
    let prior = &model.prior;
    let mut x = vec![0.0; model.problem.num_variables()];
    for t in 0..=n {
        for l in 1..=kk {
            x[model.y[t][l - 1]] = if t == 0 { 1.0 } else { rej[t][l - 1] };
        }
    }
    for t in 1..n {
        let mut acc = 0.0;
        for l in 1..=kk {
            acc = prior.cdf_ratio(l).powi(t as i32) * acc + dhat(prior, t, l) * rej[t][l - 1];
            x[model.p[t][l - 1]] = acc;
        }
    }
    let prefix = |x: &[f64], t: usize, l: usize| {
        if t == 0 {
            1.0
        } else {
            x[model.p[t][l - 1]]
        }
    };
    let mut w = 0.0;
    let mut ws = Vec::with_capacity(kk);
    for k in 1..=kk {
        let r = prior.cdf_ratio(k);
        let step = prior.pmf(k) / prior.cdf_at(k);
        let mut b = 0.0;
        for t in 1..=n {
            let y_prev = if t == 1 { 1.0 } else { rej[t - 1][k - 1] };
            b += step * prefix(&x, t - 1, k) + dhat(prior, t - 1, k) * r * y_prev
                - dhat(prior, t, k) * rej[t][k - 1];
        }
        w = r.powi(n as i32) * w + b;
        x[model.w[k - 1]] = w;
        ws.push(w);
    }
    x[model.alpha] = ws[kk - 1];
    x[model.beta] = if kk == 1 {
        ws[0]
    } else {
        ws[..kk - 1].iter().copied().fold(f64::INFINITY, f64::min)
    };
    Ok(x)
}

/// Rejection table `rej[t][ℓ-1]`, `t = 0..=n`, of the rule with acceptance
/// table `acc[t-1][ℓ-1]`, `t = 1..=n`.
pub fn acc_to_rej(acc: &[Vec<f64>], n: usize, prior: &DiscretePrior) -> Result<Vec<Vec<f64>>> {
    let kk = prior.support_size();
    check_table(acc, n, kk, "acceptance")?;
    check_positive(prior)?;
    let delta = delta_table(prior, n);
    let mut rej = vec![(1..=kk).map(|l| if l == 1 { 1.0 } else { 0.0 }).collect::<Vec<_>>()];
    for t in 1..=n {
        let prev = &rej[t - 1];
        let mut row = Vec::with_capacity(kk);
        let mut below = 0.0;
        for l in 1..=kk {
            below += prev[l - 1] * delta[t - 1][l - 1];
            let carried = prev[l - 1] * delta[t - 1][l - 1] * prior.cdf_at(l - 1);
            let fresh = below * prior.pmf(l);
            let a = if fresh > 0.0 { acc[t - 1][l - 1] } else { 0.0 };
            row.push(((carried + (1.0 - a) * fresh) / delta[t][l - 1]).clamp(0.0, 1.0));
        }
        rej.push(row);
    }
    Ok(rej)
}

/// Inverse of [`acc_to_rej`]; entries whose denominator vanishes are set to 0.
pub fn rej_to_acc(rej: &[Vec<f64>], n: usize, prior: &DiscretePrior) -> Result<Vec<Vec<f64>>> {
    let kk = prior.support_size();
    check_table(rej, n + 1, kk, "rejection")?;
    check_positive(prior)?;
    let delta = delta_table(prior, n);
    let mut acc = Vec::with_capacity(n);
    for t in 1..=n {
        let mut row = Vec::with_capacity(kk);
        let mut below = 0.0;
        for l in 1..=kk {
            below += rej[t - 1][l - 1] * delta[t - 1][l - 1];
            let fresh = below * prior.pmf(l);
            if fresh <= 0.0 {
                row.push(0.0);
                continue;
            }
            let carried = rej[t - 1][l - 1] * delta[t - 1][l - 1] * prior.cdf_at(l - 1);
            let kept = rej[t][l - 1] * delta[t][l - 1] - carried;
            row.push((1.0 - kept / fresh).clamp(0.0, 1.0));
        }
        acc.push(row);
    }
    Ok(acc)
}

pub const ENUMERATION_BUDGET: f64 = 1e6;

/// Exact win probability of a minor-oblivious rule under the prior truncated
/// at `k`, by enumerating every value sequence. Ties for the maximum win.
pub fn brute_force_win_prob(
    acc: &[Vec<f64>],
    n: usize,
    prior: &DiscretePrior,
    k: usize,
) -> Result<f64> {
    let kk = prior.support_size();
    check_table(acc, n, kk, "acceptance")?;
    if (kk as f64).powi(n as i32) > ENUMERATION_BUDGET {
        return invalid(format!("{kk}^{n} sequences exceed the enumeration budget"));
    }
    let f = prior.truncate(k)?;
    let pmf = f.pmf_vec();
    let mut seq = vec![1usize; n];
    let mut total = 0.0;
    loop {
        let weight: f64 = seq.iter().map(|&v| pmf[v - 1]).product();
        if weight > 0.0 {
            let top = *seq.iter().max().unwrap();
            let mut alive = 1.0;
            let mut best = 0;
            let mut win = 0.0;
            for (t, &v) in seq.iter().enumerate() {
                if v >= best {
                    best = v;
                    let a = acc[t][v - 1];
                    if v == top {
                        win += alive * a;
                    }
                    alive *= 1.0 - a;
                }
            }
            total += weight * win;
        }
        // odometer over {1..k}^n
        let mut i = 0;
        loop {
            if i == n {
                return Ok(total);
            }
            seq[i] += 1;
            if seq[i] <= k {
                break;
            }
            seq[i] = 1;
            i += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOutcome {
    pub lambda: f64,
    pub objective: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `y[t][ℓ-1]` for `t = 0..=n`.
    pub y: Vec<Vec<f64>>,
    pub iterations: usize,
}

fn outcome(model: &PolytopeModel, lambda: f64, x: &[f64], objective: f64, iterations: usize) -> Result<LpOutcome> {
    let viol = model.problem.max_violation(x);
    if viol > 1e-7 {
        return Err(Error::Numerical(format!(
            "LP solution violates the model by {viol:e}"
        )));
    }
    Ok(LpOutcome {
        lambda,
        objective,
        alpha: x[model.alpha],
        beta: x[model.beta],
        y: model
            .y
            .iter()
            .map(|row| row.iter().map(|&j| x[j]).collect())
            .collect(),
        iterations,
    })
}

fn map_lp_error(e: LpError) -> Error {
    match e {
        LpError::Unbounded => {
            Error::Numerical("LP reported unbounded, but alpha and beta are at most 1".into())
        }
        LpError::Infeasible(s) => Error::Numerical(format!(
            "LP reported infeasible (phase one sum {s:e}), but reject-all is feasible"
        )),
        other => Error::Lp(other),
    }
}

pub fn solve_lp(model: &PolytopeModel) -> Result<LpOutcome> {
    let mut s = Simplex::new(&model.problem, SimplexOptions::default()).map_err(map_lp_error)?;
    let sol = s.solve().map_err(map_lp_error)?;
    outcome(model, model.lambda, &sol.x, sol.objective, sol.iterations)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontierPoint {
    pub lambda: f64,
    pub result: std::result::Result<LpOutcome, String>,
}

/// Solves the LP for each weight in order, warm-starting from the previous
/// basis; a failed solve is recorded and the next one starts cold.
pub fn frontier_sweep(n: usize, prior: &DiscretePrior, lambdas: &[f64]) -> Result<Vec<FrontierPoint>> {
    if let Some(bad) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return invalid(format!("objective weight {bad} outside [0, 1]"));
    }
    let first = lambdas.first().copied().unwrap_or(1.0);
    let model = build_polytope(n, prior, first)?;
    let mut simplex: Option<Simplex> = None;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let s = match simplex.as_mut() {
            Some(s) => s,
            None => simplex.insert(
                Simplex::new(&model.problem, SimplexOptions::default()).map_err(map_lp_error)?,
            ),
        };
        let solved = s
            .set_objective(Sense::Maximize, &model.objective_coefficients(lambda))
            .and_then(|_| s.solve())
            .map_err(map_lp_error)
            .and_then(|sol| outcome(&model, lambda, &sol.x, sol.objective, sol.iterations));
        if solved.is_err() {
            simplex = None;
        }
        out.push(FrontierPoint {
            lambda,
            result: solved.map_err(|e| e.to_string()),
        });
    }
    Ok(out)
}

/// The model in CPLEX LP text format.
pub fn export_lp(model: &PolytopeModel) -> String {
    lp::to_lp_string(&model.problem)
}

//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output; exits nonzero on any FAIL.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::E;
use std::time::{Duration, Instant};
use stopping_core::analytics::{
    check_maxexp_conditions, constant_c_series, gamma_n, googol_win_formula, maxprob_alpha,
    solve_constant_c,
};
use stopping_core::engine::{googol_win_mc, simulate, simulate_coupled_sharding};
use stopping_core::hardness::{
    acc_to_rej, brute_force_win_prob, build_polytope, export_lp, frontier_sweep, point_from_rej,
    win_prob_from_rej,
};
use stopping_core::lambda::neg_x_ln_x;
use stopping_core::maxexp::{max_alpha_for_beta, solve_steps};
use stopping_core::{dynkin_threshold, gm_threshold, lambda_pair, DiscretePrior, Prior, ThresholdFn};

type Outcome = Result<(bool, String), String>;

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Line {
    id: u32,
    name: &'static str,
    status: Status,
    detail: String,
    elapsed: Duration,
}

fn run(id: u32, name: &'static str, budget: Duration, f: impl FnOnce() -> Outcome) -> Line {
    let start = Instant::now();
    let res = f();
    let elapsed = start.elapsed();
    let (ok, mut detail) = match res {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = elapsed <= budget;
    if !in_time {
        detail.push_str(&format!("; over the {budget:?} budget"));
    }
    Line {
        id,
        name,
        status: if ok && in_time { Status::Pass } else { Status::Fail },
        detail,
        elapsed,
    }
}

fn skip(id: u32, name: &'static str, detail: &str) -> Line {
    Line {
        id,
        name,
        status: Status::Skip,
        detail: detail.to_string(),
        elapsed: Duration::ZERO,
    }
}

fn e<T>(r: stopping_core::Result<T>) -> Result<T, String> {
    r.map_err(|x| x.to_string())
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn constant_c() -> Outcome {
    let c = solve_constant_c();
    let res = (constant_c_series(c) - 1.0).abs();
    Ok((
        (0.80430..=0.80440).contains(&c) && res <= 1e-12,
        format!("c = {c:.10}, residual {res:.1e}"),
    ))
}

fn lambda_roots() -> Outcome {
    let p = e(lambda_pair(1.0 / 3.0))?;
    let ok = (p.lambda1 - 0.220).abs() <= 1e-3 && (p.lambda2 - 0.538).abs() <= 1e-3;
    Ok((ok, format!("({:.6}, {:.6})", p.lambda1, p.lambda2)))
}

fn maxprob_endpoints() -> Outcome {
    let a0 = e(maxprob_alpha(0.0))?;
    let a1 = e(maxprob_alpha(1.0 / E))?;
    let ok = (a0 - 0.5801).abs() <= 5e-4 && (a1 - 1.0 / E).abs() <= 1e-9;
    Ok((ok, format!("alpha(0) = {a0:.6}, alpha(1/e) - 1/e = {:.1e}", a1 - 1.0 / E)))
}

fn maxexp_golden() -> Outcome {
    let (alpha, _) = e(max_alpha_for_beta(0.01, 300, 1e-4))?;
    let at_pair = e(solve_steps(0.6908, 0.01, 300))?;
    let theta1 = at_pair.theta_values[0];
    let in_range = (0.688..=0.693).contains(&alpha);
    let theta_ok = (theta1 - 1.0165).abs() <= 0.01;
    Ok((
        in_range && theta_ok,
        format!(
            "max alpha = {alpha:.5} (target [0.688, 0.693]: {}); theta_1 at alpha 0.6908 = {theta1:.5} ({})",
            if in_range { "in range" } else { "out of range" },
            if theta_ok { "ok" } else { "off" }
        ),
    ))
}

fn maxexp_conditions() -> Outcome {
    let (alpha, sol) = e(max_alpha_for_beta(0.01, 300, 1e-4))?;
    let theta = e(sol.threshold())?;
    let worst = e(check_maxexp_conditions(&theta, alpha, &sol.pair, 1000))?;
    Ok((worst >= -1e-6, format!("alpha = {alpha:.5}, worst residual {worst:.3e}")))
}

fn robustness_floor() -> Outcome {
    let n = 10;
    let real = e(Prior::uniform(0.0, 1.0))?;
    let predicted = e(Prior::uniform(2.0, 3.0))?;
    let gm = e(gm_threshold(n, 1001))?;
    let robust = gm.robustify(&e(lambda_pair(1.0 / 3.0))?);
    let r = e(simulate(&real, &predicted, &robust, n, 100_000, 31))?;
    let plain = e(simulate(&real, &predicted, &gm, n, 100_000, 32))?;
    let floor = 1.0 / 3.0 - 4.0 * r.maxprob.std_error;
    let ok = r.maxprob.value >= floor && plain.maxprob.value <= 0.005;
    Ok((
        ok,
        format!(
            "robust {:.4} ± {:.4} (floor {floor:.4}), plain {:.4}",
            r.maxprob.value, r.maxprob.std_error, plain.maxprob.value
        ),
    ))
}

fn dynkin_calibration() -> Outcome {
    let u = e(Prior::uniform(0.0, 1.0))?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, lam) in [0.2, 1.0 / E, 0.6].into_iter().enumerate() {
        let r = e(simulate(&u, &u, &e(dynkin_threshold(lam))?, 200, 100_000, 40 + i as u64))?;
        let target = neg_x_ln_x(lam);
        ok &= r.maxprob.agrees_with(target, 0.0, 4.0);
        parts.push(format!(
            "λ={lam:.4}: {:.4} ± {:.4} vs {target:.4}",
            r.maxprob.value, r.maxprob.std_error
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn oracle_threshold(label: &str, n: usize) -> stopping_core::Result<ThresholdFn> {
    match label {
        "dynkin" => dynkin_threshold(1.0 / E),
        "gm" => gm_threshold(n, 201),
        _ => Ok(gm_threshold(n, 201)?.robustify(&lambda_pair(1.0 / 3.0)?)),
    }
}

fn oracle_matrix() -> Outcome {
    let trials = 100_000;
    let u = e(Prior::uniform(0.0, 1.0))?;
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for n in [3usize, 10] {
        for label in ["dynkin", "gm", "robust gm"] {
            let theta = e(oracle_threshold(label, n))?;
            let exact = e(gamma_n(&theta, n))?;
            let sim = e(simulate(&u, &u, &theta, n, trials, 50 + n as u64))?;
            worst = worst.max((sim.maxprob.value - exact).abs() / sim.maxprob.std_error);
            if !sim.maxprob.agrees_with(exact, 0.0, 4.0) {
                failures.push(format!("gamma n={n} {label}"));
            }
            let predicted = e(Prior::uniform(0.0, n as f64 + 1.0))?;
            let values: Vec<f64> = (1..=n).map(|i| i as f64).collect();
            let q: Vec<f64> = values.iter().map(|&v| predicted.cdf(v)).collect();
            let g = e(googol_win_formula(&q, &theta))?;
            let mc = e(googol_win_mc(&values, &predicted, &theta, trials, 60 + n as u64))?;
            worst = worst.max((mc.value - g).abs() / mc.std_error.max(1e-300));
            if !mc.agrees_with(g, 0.0, 4.0) {
                failures.push(format!("googol n={n} {label}"));
            }
        }
    }
    Ok((
        failures.is_empty(),
        format!("12 comparisons, largest gap {worst:.2} SE; failed: {failures:?}"),
    ))
}

fn monotone_consistency() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for beta in [1.0 / 3.0, 0.1] {
        let pair = e(lambda_pair(beta))?;
        let bound = e(maxprob_alpha(beta))?;
        let mut prev = f64::INFINITY;
        let mut low = f64::INFINITY;
        for n in 2..=50 {
            let th = e(gm_threshold(n, 1001))?.robustify(&pair);
            let g = e(gamma_n(&th, n))?;
            if g > prev + 1e-12 {
                ok = false;
                parts.push(format!("increase at n={n} for β={beta:.4}"));
            }
            prev = g;
            low = low.min(g);
        }
        ok &= low >= bound - 1e-3;
        parts.push(format!("β={beta:.4}: min {low:.5} vs bound {bound:.5}"));
    }
    Ok((ok, parts.join("; ")))
}

fn sharding_dominance() -> Outcome {
    let u = e(Prior::uniform(0.0, 1.0))?;
    let mut total = 0;
    for (n, k) in [(5usize, 3usize), (8, 4)] {
        let gm = e(gm_threshold(n * k, 201))?;
        let robust = gm.robustify(&e(lambda_pair(1.0 / 3.0))?);
        for th in [&gm, &robust] {
            total += e(simulate_coupled_sharding(&u, &u, th, n, k, 10_000, 70 + n as u64))?;
        }
    }
    Ok((total == 0, format!("{total} violations over 4 x 10^4 coupled trials")))
}

fn random_acc(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..k)
                .map(|_| match rng.random_range(0..4) {
                    0 => 0.0,
                    1 => 1.0,
                    _ => rng.random::<f64>(),
                })
                .collect()
        })
        .collect()
}

fn lp_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut worst_violation: f64 = 0.0;
    for (n, kk) in [(2usize, 2usize), (3, 3), (4, 3)] {
        let prior = e(DiscretePrior::harmonic(kk))?;
        let model = e(build_polytope(n, &prior, 0.5))?;
        for _ in 0..100 {
            let acc = random_acc(&mut rng, n, kk);
            let rej = e(acc_to_rej(&acc, n, &prior))?;
            let x = e(point_from_rej(&model, &rej))?;
            worst_violation = worst_violation.max(model.problem.max_violation(&x));
            for k in 1..=kk {
                let exact = e(brute_force_win_prob(&acc, n, &prior, k))?;
                let unscaled = e(win_prob_from_rej(&prior, n, &rej, k))?;
                worst = worst
                    .max((x[model.w[k - 1]] - exact).abs())
                    .max((unscaled - exact).abs());
            }
        }
        let mut reject_all = vec![vec![1.0; kk]; n + 1];
        reject_all[0] = (1..=kk).map(|l| f64::from(l == 1)).collect();
        let x = e(point_from_rej(&model, &reject_all))?;
        let v = model.problem.max_violation(&x);
        worst_violation = worst_violation.max(v);
        if x[model.alpha].abs() > 1e-12 || x[model.beta].abs() > 1e-12 {
            return Ok((false, format!("reject-all point at ({n},{kk}) has nonzero ratios")));
        }
    }
    Ok((
        worst <= 1e-9 && worst_violation <= 1e-9,
        format!("largest gap to enumeration {worst:.2e}, largest row violation {worst_violation:.2e}"),
    ))
}

/// Optimal values of the (10, 64) harmonic model at λ = 0, 0.5, 1, from the
/// first verified run of the embedded solver.
const FRONTIER_GOLDEN: [(usize, f64); 3] = [
    (0, 5.0956089763821522e-1),
    (10, 5.1950082516580898e-1),
    (20, 6.1781323317160952e-1),
];

fn lp_frontier() -> Outcome {
    let prior = e(DiscretePrior::harmonic(64))?;
    let lambdas: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let pts = e(frontier_sweep(10, &prior, &lambdas))?;
    let mut vals = Vec::with_capacity(pts.len());
    for p in &pts {
        match &p.result {
            Ok(o) => vals.push(o.objective),
            Err(msg) => return Err(format!("λ={}: {msg}", p.lambda)),
        }
    }
    let convex_gap = vals
        .windows(3)
        .map(|w| w[0] + w[2] - 2.0 * w[1])
        .fold(f64::INFINITY, f64::min);
    let golden_gap = FRONTIER_GOLDEN
        .iter()
        .map(|&(i, g)| (vals[i] - g).abs())
        .fold(0.0, f64::max);
    let ok = vals[20] >= 0.5801 && vals[0] >= 0.3679 && convex_gap >= -1e-9 && golden_gap <= 1e-9;
    Ok((
        ok,
        format!(
            "LP*(0) = {:.6}, LP*(1) = {:.6}, min second difference {convex_gap:.2e}, golden gap {golden_gap:.1e}",
            vals[0], vals[20]
        ),
    ))
}

/// Full-size models are only exported; solving them needs an external
/// solver, so this is opt-in through `STOPPING_FULL_SIZE_LP`.
fn full_size_export() -> Outcome {
    let dir = std::env::temp_dir().join("stopping-full-size-lp");
    std::fs::create_dir_all(&dir).map_err(|x| x.to_string())?;
    let prior = e(DiscretePrior::harmonic(1024))?;
    for i in [0u32, 50, 100] {
        let lam = f64::from(i) / 100.0;
        let model = e(build_polytope(30, &prior, lam))?;
        let path = dir.join(format!("hardness_n30_k1024_l{i:03}.lp"));
        std::fs::write(&path, export_lp(&model)).map_err(|x| x.to_string())?;
    }
    Ok((true, format!("models written to {}", dir.display())))
}

fn main() {
    let mut lines = vec![
        run(1, "constant c", secs(1), constant_c),
        run(2, "lambda roots", secs(1), lambda_roots),
        run(3, "maxprob endpoints", secs(5), maxprob_endpoints),
        run(4, "maxexp golden point", secs(600), maxexp_golden),
        run(5, "maxexp sufficient conditions", secs(60), maxexp_conditions),
        run(6, "robustness floor", secs(60), robustness_floor),
        run(7, "dynkin calibration", secs(120), dynkin_calibration),
        run(8, "formula vs simulation matrix", secs(300), oracle_matrix),
        run(9, "monotone consistency", secs(120), monotone_consistency),
        run(10, "sharding dominance", secs(60), sharding_dominance),
        run(11, "lp soundness", secs(60), lp_soundness),
        run(12, "lp frontier", secs(600), lp_frontier),
    ];
    if std::env::var_os("STOPPING_FULL_SIZE_LP").is_some() {
        lines.push(run(13, "full-size lp export", secs(600), full_size_export));
    } else {
        lines.push(skip(
            13,
            "full-size hardness",
            "needs an external LP solver; set STOPPING_FULL_SIZE_LP=1 to export the models",
        ));
    }
    lines.push(skip(
        14,
        "cited baselines",
        "literature constants are quoted, not reproduced",
    ));

    let mut failed = 0;
    for l in &lines {
        let tag = match l.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!(
            "{tag} [{:>2}] {}: {} ({:.2?})",
            l.id, l.name, l.detail, l.elapsed
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

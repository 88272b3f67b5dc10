use std::f64::consts::E;
use std::path::Path;

use stopping_core::analytics::{gamma_n, maxprob_alpha};
use stopping_core::engine::simulate;
use stopping_core::hardness::{build_polytope, export_lp, frontier_sweep};
use stopping_core::maxexp::{max_alpha_for_beta, tradeoff_curve_maxexp, CurveSource};
use stopping_core::verify::run_suite;
use stopping_core::{dynkin_threshold, lambda_pair, DiscretePrior, Prior, ThresholdFn};

use crate::output::{csv, emit, invalid, num, CliError, CliResult, RunManifest};

/// A number, a fraction `p/q`, or `1/e` for the peak robustness.
pub fn parse_number(s: &str) -> CliResult<f64> {
    let t = s.trim();
    let bad = || CliError::Invalid(format!("bad number {s:?}"));
    if t.eq_ignore_ascii_case("1/e") {
        return Ok(1.0 / E);
    }
    match t.split_once('/') {
        Some((p, q)) => {
            let (p, q) = (
                p.trim().parse::<f64>().map_err(|_| bad())?,
                q.trim().parse::<f64>().map_err(|_| bad())?,
            );
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => t.parse::<f64>().map_err(|_| bad()),
    }
}

/// `a:b:step`, inclusive of `b` up to rounding.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return invalid(format!("grid {s:?} is not a:b:step"));
    };
    let (a, b, step) = (parse_number(a)?, parse_number(b)?, parse_number(step)?);
    if !(step > 0.0) || b < a || !a.is_finite() || !b.is_finite() {
        return invalid(format!("grid {s:?} needs a <= b and a positive step"));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return invalid(format!("grid {s:?} has too many points"));
    }
    Ok((0..count).map(|i| (a + i as f64 * step).min(b)).collect())
}

/// Points from `--beta` values or a `--beta-grid`, exactly one of which is given.
pub fn collect_points(list: &[String], grid: Option<&str>, what: &str) -> CliResult<Vec<f64>> {
    match (list.is_empty(), grid) {
        (false, None) => list
            .iter()
            .flat_map(|s| s.split(','))
            .map(parse_number)
            .collect(),
        (true, Some(g)) => parse_grid(g),
        (true, None) => invalid(format!("give --{what} or --{what}-grid")),
        (false, Some(_)) => invalid(format!("give only one of --{what} and --{what}-grid")),
    }
}

fn point_label(list: &[String], grid: Option<&str>) -> String {
    grid.map(str::to_string).unwrap_or_else(|| list.join(","))
}

pub struct MaxExpCurve<'a> {
    pub betas: &'a [String],
    pub beta_grid: Option<&'a str>,
    pub m: usize,
    pub tol: f64,
    pub out: Option<&'a Path>,
}

pub fn maxexp_curve(a: MaxExpCurve) -> CliResult<()> {
    let betas = collect_points(a.betas, a.beta_grid, "beta")?;
    if let Some(b) = betas.iter().find(|&&b| !(0.0..=1.0 / E).contains(&b)) {
        return invalid(format!("beta = {b} outside [0, 1/e]"));
    }
    if a.m < 2 || !(a.tol > 0.0) {
        return invalid("need --m >= 2 and a positive --tol");
    }
    let mut manifest = RunManifest::new("maxexp-curve");
    manifest
        .set("betas", point_label(a.betas, a.beta_grid))
        .set("m", a.m)
        .set("tol", a.tol);
    manifest.out = a.out.map(Path::to_path_buf);
    let curve = tradeoff_curve_maxexp(&betas, a.m, a.tol);
    if curve
        .iter()
        .all(|p| matches!(p.source, CurveSource::Failed(_)))
    {
        let msgs: Vec<String> = curve
            .iter()
            .filter_map(|p| match &p.source {
                CurveSource::Failed(m) => Some(format!("beta={}: {m}", p.beta)),
                _ => None,
            })
            .collect();
        return Err(CliError::Numerical(msgs.join("; ")));
    }
    let mut rows = Vec::with_capacity(curve.len());
    for p in &curve {
        let source = match &p.source {
            CurveSource::Solved => "solved",
            CurveSource::Literature => "literature",
            CurveSource::Failed(m) => {
                eprintln!("warning: beta={} failed: {m}", p.beta);
                "failed"
            }
        };
        let alpha = p.alpha.map_or_else(|| "nan".to_string(), num);
        rows.push(format!("{},{alpha},{source}", num(p.beta)));
    }
    emit(&csv(&manifest, "beta,alpha,source", &rows), a.out)
}

pub fn maxprob_curve(betas: &[String], grid: Option<&str>, out: Option<&Path>) -> CliResult<()> {
    let points = collect_points(betas, grid, "beta")?;
    let mut manifest = RunManifest::new("maxprob-curve");
    manifest.set("betas", point_label(betas, grid));
    manifest.out = out.map(Path::to_path_buf);
    let rows = points
        .iter()
        .map(|&b| Ok(format!("{},{}", num(b), num(maxprob_alpha(b)?))))
        .collect::<CliResult<Vec<_>>>()?;
    emit(&csv(&manifest, "beta,alpha", &rows), out)
}

pub struct Frontier<'a> {
    pub n: usize,
    pub k_support: Option<usize>,
    pub predicted: Option<&'a str>,
    pub lambdas: &'a [String],
    pub lambda_grid: Option<&'a str>,
    pub export: bool,
    pub out: Option<&'a Path>,
}

pub fn hardness_frontier(a: Frontier) -> CliResult<()> {
    let lambdas = if a.lambdas.is_empty() && a.lambda_grid.is_none() {
        parse_grid("0:1:0.05")?
    } else {
        collect_points(a.lambdas, a.lambda_grid, "lambda")?
    };
    let (prior, prior_label) = match (a.predicted, a.k_support) {
        (Some(_), Some(_)) => return invalid("give only one of --predicted and --k-support"),
        (Some(spec), None) => match Prior::parse(spec)? {
            Prior::Discrete(d) => (d, spec.to_string()),
            _ => return invalid("the hardness model needs a discrete predicted prior"),
        },
        (None, k) => {
            let k = k.unwrap_or(64);
            (DiscretePrior::harmonic(k)?, format!("harmonic:{k}"))
        }
    };
    let mut manifest = RunManifest::new("hardness-frontier");
    manifest
        .set("n", a.n)
        .set("predicted", &prior_label)
        .set(
            "lambdas",
            a.lambda_grid
                .map(str::to_string)
                .unwrap_or_else(|| if a.lambdas.is_empty() { "0:1:0.05".into() } else { a.lambdas.join(",") }),
        )
        .set("solver", if a.export { "export" } else { "embedded" });
    manifest.out = a.out.map(Path::to_path_buf);

    if a.export {
        let Some(dir) = a.out else {
            return invalid("export mode writes one file per lambda; give --out DIR");
        };
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", dir.display())))?;
        let k = prior.support_size();
        let mut rows = Vec::with_capacity(lambdas.len());
        for (i, &lam) in lambdas.iter().enumerate() {
            let model = build_polytope(a.n, &prior, lam)?;
            let path = dir.join(format!("hardness_n{}_k{k}_{i:03}.lp", a.n));
            let text = format!("\\ {}\n{}", manifest.to_line(), export_lp(&model));
            emit(&text, Some(&path))?;
            rows.push(format!("{},{}", num(lam), path.display()));
        }
        print!("{}", csv(&manifest, "lambda,file", &rows));
        return Ok(());
    }

    let points = frontier_sweep(a.n, &prior, &lambdas)?;
    if points.iter().all(|p| p.result.is_err()) && !points.is_empty() {
        return Err(CliError::Numerical(
            points[0].result.as_ref().err().cloned().unwrap_or_default(),
        ));
    }
    let rows: Vec<String> = points
        .iter()
        .map(|p| match &p.result {
            Ok(o) => format!("{},{},{},{}", num(p.lambda), num(o.objective), num(o.alpha), num(o.beta)),
            Err(m) => {
                eprintln!("warning: lambda={} failed: {m}", p.lambda);
                format!("{},nan,nan,nan", num(p.lambda))
            }
        })
        .collect();
    emit(
        &csv(&manifest, "lambda,lp_star,alpha_star,beta_star", &rows),
        a.out,
    )
}

/// A threshold spec, with `maxexp:β` solved here and an optional robustification.
pub fn build_threshold(
    spec: &str,
    robustify: Option<f64>,
    m: usize,
    tol: f64,
) -> CliResult<ThresholdFn> {
    let th = match spec.split_once(':') {
        Some((kind, arg)) if kind.trim().eq_ignore_ascii_case("maxexp") => {
            let beta = parse_number(arg)?;
            max_alpha_for_beta(beta, m, tol)?.1.threshold()?
        }
        Some((kind, arg)) if kind.trim().eq_ignore_ascii_case("dynkin") => {
            dynkin_threshold(parse_number(arg)?)?
        }
        _ => ThresholdFn::parse(spec, m)?,
    };
    Ok(match robustify {
        Some(b) => th.robustify(&lambda_pair(b)?),
        None => th,
    })
}

pub struct Simulate<'a> {
    pub real: &'a str,
    pub predicted: Option<&'a str>,
    pub threshold: &'a str,
    pub robustify: Option<f64>,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub m: usize,
    pub out: Option<&'a Path>,
}

pub fn simulate_cmd(a: Simulate) -> CliResult<()> {
    let predicted_spec = a.predicted.unwrap_or(a.real);
    let real = Prior::parse(a.real)?;
    let predicted = Prior::parse(predicted_spec)?;
    let th = build_threshold(a.threshold, a.robustify, a.m, 1e-4)?;
    let mut manifest = RunManifest::new("simulate");
    manifest
        .set("real", a.real)
        .set("predicted", predicted_spec)
        .set("threshold", a.threshold)
        .set("n", a.n)
        .set("trials", a.trials)
        .set("seed", a.seed)
        .set("m", a.m);
    if let Some(b) = a.robustify {
        manifest.set("robustify", b);
    }
    manifest.out = a.out.map(Path::to_path_buf);
    let r = simulate(&real, &predicted, &th, a.n, a.trials, a.seed)?;
    let p = r.acceptance_rate;
    let mut rows = vec![
        format!("maxprob,{},{}", num(r.maxprob.value), num(r.maxprob.std_error)),
        format!(
            "maxexp_ratio,{},{}",
            num(r.maxexp_ratio.value),
            num(r.maxexp_ratio.std_error)
        ),
        format!(
            "acceptance_rate,{},{}",
            num(p),
            num((p * (1.0 - p) / r.trials as f64).sqrt())
        ),
    ];
    // the closed form assumes the prediction is right and values never tie
    if real == predicted && !real.is_discrete() {
        rows.push(format!("maxprob_formula,{},{}", num(gamma_n(&th, a.n)?), num(0.0)));
    }
    emit(&csv(&manifest, "metric,value,std_error", &rows), a.out)
}

pub fn thresholds(
    spec: &str,
    robustify: Option<f64>,
    m: usize,
    tol: f64,
    out: Option<&Path>,
) -> CliResult<()> {
    let th = build_threshold(spec, robustify, m, tol)?;
    let mut manifest = RunManifest::new("thresholds");
    manifest.set("threshold", spec).set("m", m).set("tol", tol);
    if let Some(b) = robustify {
        manifest.set("robustify", b);
    }
    manifest.out = out.map(Path::to_path_buf);
    let body = th.to_csv();
    emit(&format!("# {}\n{body}", manifest.to_line()), out)
}

pub fn verify(suite: &str, out: Option<&Path>) -> CliResult<()> {
    let results = run_suite(suite)?;
    let mut manifest = RunManifest::new("verify");
    manifest.set("suite", suite);
    manifest.out = out.map(Path::to_path_buf);
    let mut text = format!("# {}\n", manifest.to_line());
    let mut failed = 0;
    for r in &results {
        if !r.passed {
            failed += 1;
        }
        let tag = if r.passed { "PASS" } else { "FAIL" };
        text.push_str(&format!("{tag} {}: {}\n", r.name, r.detail));
    }
    text.push_str(&format!("{} of {} checks passed\n", results.len() - failed, results.len()));
    emit(&text, out)?;
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} of {} checks", results.len())));
    }
    Ok(())
}

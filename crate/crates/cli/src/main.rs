mod commands;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{parse_number, Frontier, MaxExpCurve, Simulate};
use crate::output::CliResult;

#[derive(Parser, Debug)]
#[command(name = "stopping", version, about = "Threshold rules for stopping with a predicted prior")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Solver {
    Embedded,
    Export,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Best MaxExp consistency per robustness level, as `beta,alpha,source`
    MaxexpCurve {
        /// Robustness levels; repeatable or comma separated, `1/e` allowed
        #[arg(long, value_name = "BETA")]
        beta: Vec<String>,
        /// Robustness grid `a:b:step`
        #[arg(long, value_name = "A:B:STEP")]
        beta_grid: Option<String>,
        /// Number of steps between the two roots
        #[arg(long, default_value_t = 300)]
        m: usize,
        /// Bisection tolerance on alpha
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Large-n MaxProb consistency per robustness level, as `beta,alpha`
    MaxprobCurve {
        #[arg(long, value_name = "BETA")]
        beta: Vec<String>,
        #[arg(long, value_name = "A:B:STEP")]
        beta_grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal values of the MaxProb hardness LP over objective weights
    HardnessFrontier {
        #[arg(long)]
        n: usize,
        /// Support size of the harmonic predicted prior (default 64)
        #[arg(long)]
        k_support: Option<usize>,
        /// Discrete predicted prior instead of the harmonic one
        #[arg(long)]
        predicted: Option<String>,
        /// Objective weights on consistency; repeatable or comma separated
        #[arg(long, value_name = "LAMBDA")]
        lambda: Vec<String>,
        /// Weight grid `a:b:step` (default 0:1:0.05)
        #[arg(long, value_name = "A:B:STEP")]
        lambda_grid: Option<String>,
        #[arg(long, value_enum, default_value_t = Solver::Embedded)]
        solver: Solver,
        /// Output file, or the directory for LP files in export mode
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of both objectives for one rule
    Simulate {
        /// Prior the values are drawn from
        #[arg(long)]
        real: String,
        /// Prior the rule believes in (default: the real one)
        #[arg(long)]
        predicted: Option<String>,
        /// `dynkin:L`, `gm:N`, `single:N`, `const:V`, `maxexp:BETA` or `file:PATH`
        #[arg(long)]
        threshold: String,
        /// Robustness level for the robust version of the threshold
        #[arg(long, value_parser = parse_beta)]
        robustify: Option<f64>,
        /// Number of values per instance
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid size for `gm` and step count for `maxexp` thresholds
        #[arg(long, default_value_t = 1001)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump a threshold as `t,theta`
    Thresholds {
        #[arg(long)]
        threshold: String,
        #[arg(long, value_parser = parse_beta)]
        robustify: Option<f64>,
        /// Grid size for `gm` and step count for `maxexp` thresholds
        #[arg(long, default_value_t = 1001)]
        m: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a self-check suite: quick, oracle or golden
    Verify {
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_beta(s: &str) -> Result<f64, String> {
    parse_number(s).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::MaxexpCurve {
            beta,
            beta_grid,
            m,
            tol,
            out,
        } => commands::maxexp_curve(MaxExpCurve {
            betas: &beta,
            beta_grid: beta_grid.as_deref(),
            m,
            tol,
            out: out.as_deref(),
        }),
        Command::MaxprobCurve {
            beta,
            beta_grid,
            out,
        } => commands::maxprob_curve(&beta, beta_grid.as_deref(), out.as_deref()),
        Command::HardnessFrontier {
            n,
            k_support,
            predicted,
            lambda,
            lambda_grid,
            solver,
            out,
        } => commands::hardness_frontier(Frontier {
            n,
            k_support,
            predicted: predicted.as_deref(),
            lambdas: &lambda,
            lambda_grid: lambda_grid.as_deref(),
            export: solver == Solver::Export,
            out: out.as_deref(),
        }),
        Command::Simulate {
            real,
            predicted,
            threshold,
            robustify,
            n,
            trials,
            seed,
            m,
            out,
        } => commands::simulate_cmd(Simulate {
            real: &real,
            predicted: predicted.as_deref(),
            threshold: &threshold,
            robustify,
            n,
            trials,
            seed,
            m,
            out: out.as_deref(),
        }),
        Command::Thresholds {
            threshold,
            robustify,
            m,
            tol,
            out,
        } => commands::thresholds(&threshold, robustify, m, tol, out.as_deref()),
        Command::Verify { suite, out } => commands::verify(&suite, out.as_deref()),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

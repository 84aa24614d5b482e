//! `isocorr`: boundary correlations of regions from the command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure,
//! 4 a cross-check disagreed.

mod check;
mod error;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isocorr::correlate::{
    correlations, regular_correlation, scaled_regular, scaling_limit, BasisStrategy,
    CorrelationMatrix,
};
use isocorr::oracle::oracle_correlations;
use isocorr::region::regular_polygon;
use isocorr::{Execution, TolerancePolicy};
use serde_json::json;

use crate::check::Outcome;
use crate::error::CliError;
use crate::input::read_region;

#[derive(Parser)]
#[command(
    name = "isocorr",
    version,
    about = "Boundary spin correlations of critical Ising regions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Agreement tolerance for cross-checks.
    #[arg(long, global = true, default_value_t = TolerancePolicy::default().agreement_eps)]
    tol: f64,
    /// Run on one thread even when built with parallel support.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisKind {
    Auto,
    Fourier,
    Samples,
    Derivative,
    Recursive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Closed,
    Pipeline,
    Both,
}

#[derive(Args)]
struct BasisArgs {
    #[arg(long, value_enum, default_value_t = BasisKind::Auto)]
    basis: BasisKind,
    /// Index of the derivative basis.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Sample parameters in [0, π) for the samples basis.
    #[arg(long, value_delimiter = ',')]
    samples: Option<Vec<f64>>,
}

impl BasisArgs {
    fn strategy(&self) -> BasisStrategy {
        match self.basis {
            BasisKind::Auto => BasisStrategy::Auto,
            BasisKind::Fourier => BasisStrategy::Fourier,
            BasisKind::Samples => BasisStrategy::Samples(self.samples.clone()),
            BasisKind::Derivative => BasisStrategy::Derivative(self.k),
            BasisKind::Recursive => BasisStrategy::Recursive,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Correlation matrix of a region file.
    Correlations {
        file: PathBuf,
        #[command(flatten)]
        basis: BasisArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// First row of the regular 2n-gon's matrix.
    Regular {
        n: usize,
        #[arg(long, value_enum, default_value_t = Mode::Closed)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Formula against exhaustive enumeration.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        placements: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        basis: BasisArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Scaled regular-polygon correlations against 1/sin(πx).
    Limit {
        x: f64,
        /// Ascending polygon sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256, 512])]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Runs the invariant suite on a region file.
    Check {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Shortest round-trip form; exponent notation for tiny magnitudes.
fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn matrix_json(m: &CorrelationMatrix) -> serde_json::Value {
    json!(m.to_rows())
}

fn print_json(v: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string(v).expect("json values serialize")
    );
}

fn cmd_correlations(
    file: PathBuf,
    basis: &BasisArgs,
    format: Format,
    policy: &TolerancePolicy,
) -> Result<(), CliError> {
    let r = read_region(&file, policy)?;
    let m = correlations(&r, &basis.strategy(), policy)?;
    match format {
        Format::Json => print_json(&json!({ "n": m.n(), "correlations": matrix_json(&m) })),
        Format::Csv => {
            println!("j,k,correlation");
            for j in 1..=m.n() {
                for k in 1..=m.n() {
                    println!("{j},{k},{}", num(m.get(j, k)));
                }
            }
        }
    }
    Ok(())
}

fn cmd_regular(
    n: usize,
    mode: Mode,
    format: Format,
    policy: &TolerancePolicy,
    tol: f64,
) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Input("n must be at least 1".into()));
    }
    let closed: Vec<f64> = (1..=n).map(|k| regular_correlation(n, 1, k)).collect();
    let pipeline = match mode {
        Mode::Closed => None,
        _ => {
            let m = correlations(&regular_polygon(n), &BasisStrategy::Auto, policy)?;
            Some((1..=n).map(|k| m.get(1, k)).collect::<Vec<f64>>())
        }
    };
    let diff = pipeline.as_ref().map(|p| {
        p.iter()
            .zip(&closed)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    });
    match format {
        Format::Json => {
            let mut v = json!({ "n": n });
            if !matches!(mode, Mode::Pipeline) {
                v["closed"] = json!(closed);
            }
            if let Some(p) = &pipeline {
                v["pipeline"] = json!(p);
            }
            if let (Mode::Both, Some(d)) = (mode, diff) {
                v["max_diff"] = json!(d);
            }
            print_json(&v);
        }
        Format::Csv => match (mode, &pipeline) {
            (Mode::Closed, _) => {
                println!("k,closed");
                closed
                    .iter()
                    .enumerate()
                    .for_each(|(i, c)| println!("{},{}", i + 1, num(*c)));
            }
            (Mode::Pipeline, Some(p)) => {
                println!("k,pipeline");
                p.iter()
                    .enumerate()
                    .for_each(|(i, c)| println!("{},{}", i + 1, num(*c)));
            }
            (_, Some(p)) => {
                println!("k,closed,pipeline,abs_diff");
                for (i, (c, q)) in closed.iter().zip(p).enumerate() {
                    println!("{},{},{},{}", i + 1, num(*c), num(*q), num((c - q).abs()));
                }
            }
            (_, None) => unreachable!("pipeline computed for this mode"),
        },
    }
    match diff {
        Some(d) if matches!(mode, Mode::Both) && d > tol => Err(CliError::Disagreement(format!(
            "closed form and pipeline differ by {d:e} (tol {tol:e})"
        ))),
        _ => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_oracle(
    file: PathBuf,
    placements: usize,
    seed: u64,
    basis: &BasisArgs,
    format: Format,
    policy: &TolerancePolicy,
    tol: f64,
    exec: Execution,
) -> Result<(), CliError> {
    let r = read_region(&file, policy)?;
    let formula = correlations(&r, &basis.strategy(), policy)?;
    // spread is judged below, after printing
    let loose = TolerancePolicy {
        agreement_eps: f64::INFINITY,
        ..*policy
    };
    let o = oracle_correlations(&r, placements, seed, &loose, exec)?;
    let n = r.n();
    let mut worst = (0.0, 1, 1);
    for j in 1..=n {
        for k in 1..=n {
            let d = (formula.get(j, k) - o.mean.get(j, k)).abs();
            if d > worst.0 {
                worst = (d, j, k);
            }
        }
    }
    let (diff, wj, wk) = worst;
    match format {
        Format::Json => print_json(&json!({
            "n": n,
            "formula": matrix_json(&formula),
            "oracle": matrix_json(&o.mean),
            "max_diff": diff,
            "spread": o.spread,
            "placements": placements,
            "edge_counts": o.edge_counts,
        })),
        Format::Csv => {
            println!("j,k,formula,oracle,abs_diff");
            for j in 1..=n {
                for k in 1..=n {
                    let (a, b) = (formula.get(j, k), o.mean.get(j, k));
                    println!("{j},{k},{},{},{}", num(a), num(b), num((a - b).abs()));
                }
            }
            println!("# max_diff {}", num(diff));
            println!("# spread {}", num(o.spread));
            println!("# placements {placements}");
        }
    }
    if diff > tol {
        return Err(CliError::Disagreement(format!(
            "entry ({wj}, {wk}): formula {} vs oracle {}, difference {diff:e} (tol {tol:e})",
            formula.get(wj, wk),
            o.mean.get(wj, wk)
        )));
    }
    if o.spread > tol {
        return Err(CliError::Disagreement(format!(
            "placement spread {:e} exceeds {tol:e}",
            o.spread
        )));
    }
    Ok(())
}

fn cmd_limit(x: f64, sizes: &[usize], format: Format) -> Result<(), CliError> {
    let limit = scaling_limit(x)?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(CliError::Input("polygon sizes must be positive".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Input(
            "polygon sizes must be strictly ascending".into(),
        ));
    }
    let rows = sizes
        .iter()
        .map(|&n| scaled_regular(n, x).map(|s| (n, s, (s - limit).abs())))
        .collect::<Result<Vec<_>, _>>()?;
    match format {
        Format::Json => print_json(&json!({
            "x": x,
            "limit": limit,
            "rows": rows.iter().map(|&(n, s, e)| json!({ "n": n, "scaled": s, "abs_error": e })).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            println!("n,scaled,limit,abs_error");
            for (n, s, e) in rows {
                println!("{n},{},{},{}", num(s), num(limit), num(e));
            }
        }
    }
    Ok(())
}

fn cmd_check(
    file: PathBuf,
    seed: u64,
    policy: &TolerancePolicy,
    tol: f64,
    exec: Execution,
) -> Result<(), CliError> {
    let r = read_region(&file, policy)?;
    let findings = check::run(&r, seed, policy, tol, exec);
    for f in &findings {
        let tag = match f.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skip => "SKIP",
        };
        println!("{}: {tag} {}", f.name, f.detail);
    }
    match findings.iter().find(|f| f.outcome == Outcome::Fail) {
        Some(f) => Err(CliError::Disagreement(format!("{}: {}", f.name, f.detail))),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let policy = TolerancePolicy::default();
    let tol = cli.tol;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Input(format!(
            "--tol must be positive and finite, got {tol}"
        )));
    }
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Correlations {
            file,
            basis,
            format,
        } => cmd_correlations(file, &basis, format, &policy),
        Command::Regular { n, mode, format } => cmd_regular(n, mode, format, &policy, tol),
        Command::Oracle {
            file,
            placements,
            seed,
            basis,
            format,
        } => cmd_oracle(file, placements, seed, &basis, format, &policy, tol, exec),
        Command::Limit { x, n, format } => cmd_limit(x, &n, format),
        Command::Check { file, seed } => cmd_check(file, seed, &policy, tol, exec),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

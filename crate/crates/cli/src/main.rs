mod outcome;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use geosub_core::oracle::{cross_check, CrossCheckReport};
use geosub_core::{random_system, StateSpaceSystem, DEFAULT_ENTRY_RANGE, DEFAULT_TOL};
use rayon::prelude::*;
use serde_json::json;

use outcome::{classify, Outcome};
use report::Quantity;

/// Geometric subspaces of linear state-space systems.
#[derive(Debug, Parser)]
#[command(name = "geosub", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute subspaces and dimensions for a system file.
    Compute {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        what: Quantity,
        #[arg(long, default_value_t = DEFAULT_TOL, value_parser = parse_tol)]
        tol: f64,
        /// Write the report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Cross-check closed forms against the recursive algorithms.
    Check {
        #[command(flatten)]
        source: CheckSource,
        #[arg(long, default_value_t = DEFAULT_TOL, value_parser = parse_tol)]
        tol: f64,
    },
    /// Write a random integer system.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
struct CheckSource {
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    input: Option<PathBuf>,
    /// Number of random systems, using seeds S, S+1, ...
    #[arg(long, requires_all = ["n", "m", "p", "seed"])]
    random: Option<u64>,
    #[arg(long, requires = "random")]
    n: Option<usize>,
    #[arg(long, requires = "random")]
    m: Option<usize>,
    #[arg(long, requires = "random")]
    p: Option<usize>,
    #[arg(long, requires = "random")]
    seed: Option<u64>,
}

fn parse_tol(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t.is_finite() && t > 0.0 => Ok(t),
        _ => Err(format!(
            "tolerance must be a positive finite number, got {s:?}"
        )),
    }
}

/// Rejects zero dimensions with the usage of `subcommand`.
fn require_dims(subcommand: &str, n: usize, m: usize, p: usize) -> Result<(), ExitCode> {
    if n >= 1 && m >= 1 && p >= 1 {
        return Ok(());
    }
    let mut cmd = Cli::command();
    cmd.build();
    let usage = cmd
        .find_subcommand_mut(subcommand)
        .expect("known subcommand")
        .render_usage();
    eprintln!("error: --n, --m and --p must all be at least 1 (got {n}, {m}, {p})\n\n{usage}");
    Err(ExitCode::from(Outcome::Invalid.exit_code()))
}

fn load(path: &Path) -> Result<StateSpaceSystem, ExitCode> {
    StateSpaceSystem::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(classify(&e).exit_code())
    })
}

fn compute(
    input: &Path,
    what: Quantity,
    tol: f64,
    output: Option<&Path>,
) -> Result<Outcome, ExitCode> {
    let sys = load(input)?;
    let report = report::compute(&sys, what, tol);
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            ExitCode::from(Outcome::Invalid.exit_code())
        })?,
        None => print!("{text}"),
    }
    Ok(report.outcome())
}

fn check(source: &CheckSource, tol: f64) -> Result<Outcome, ExitCode> {
    let systems: Vec<(Option<u64>, StateSpaceSystem)> = match (&source.input, source.random) {
        (Some(path), _) => vec![(None, load(path)?)],
        (None, Some(count)) => {
            let (n, m, p, seed) = (
                source.n.unwrap(),
                source.m.unwrap(),
                source.p.unwrap(),
                source.seed.unwrap(),
            );
            require_dims("check", n, m, p)?;
            (0..count)
                .map(|i| {
                    let s = seed.wrapping_add(i);
                    (Some(s), random_system(n, m, p, s, DEFAULT_ENTRY_RANGE))
                })
                .collect()
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let reports: Vec<geosub_core::Result<CrossCheckReport>> = systems
        .par_iter()
        .map(|(_, sys)| cross_check(sys, tol))
        .collect();

    let (mut compared, mut disagreements) = (0, 0);
    let mut outcome = Outcome::Ok;
    for ((seed, sys), report) in systems.iter().zip(&reports) {
        let report = match report {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e}");
                return Err(ExitCode::from(classify(e).exit_code()));
            }
        };
        compared += report.compared();
        let d = report.disagreements();
        if d > 0 {
            disagreements += d;
            outcome = Outcome::Failure;
            let shown = json!({
                "seed": seed,
                "system": serde_json::from_str::<serde_json::Value>(&sys.to_json().expect("validated")).unwrap(),
                "report": report,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&shown).expect("report serializes")
            );
        }
    }
    println!(
        "checked {} systems, {compared} quantities, {disagreements} disagreements",
        systems.len()
    );
    Ok(outcome)
}

fn random(n: usize, m: usize, p: usize, seed: u64, output: &Path) -> Result<Outcome, ExitCode> {
    require_dims("random", n, m, p)?;
    let sys = random_system(n, m, p, seed, DEFAULT_ENTRY_RANGE);
    sys.save(output).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(Outcome::Invalid.exit_code())
    })?;
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compute {
            input,
            what,
            tol,
            output,
        } => compute(input, *what, *tol, output.as_deref()),
        Command::Check { source, tol } => check(source, *tol),
        Command::Random {
            n,
            m,
            p,
            seed,
            output,
        } => random(*n, *m, *p, *seed, output),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(code) => code,
    }
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tau_core::commands::{run_problem, Overrides};
use tau_core::problem::{ProblemFile, Verb};
use tau_core::rat::parse_q;
use tau_core::{Error, Q};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Solve,
    Trivial,
    Torsion,
    Exp,
    Periods,
    Scan,
    VerifyNormLaw,
    #[value(alias = "finite-tower")]
    Remark72,
}

impl From<Cmd> for Verb {
    fn from(c: Cmd) -> Verb {
        match c {
            Cmd::Solve => Verb::Solve,
            Cmd::Trivial => Verb::Trivial,
            Cmd::Torsion => Verb::Torsion,
            Cmd::Exp => Verb::Exp,
            Cmd::Periods => Verb::Periods,
            Cmd::Scan => Verb::Scan,
            Cmd::VerifyNormLaw => Verb::VerifyNormLaw,
            Cmd::Remark72 => Verb::Remark72,
        }
    }
}

fn rational(s: &str) -> Result<Q, String> {
    parse_q(s).ok_or_else(|| format!("'{s}' is not a rational a or a/b"))
}

/// Runs the matching command blocks of a problem file and prints a JSON report.
///
/// Exit status: 0 on success, 1 on errors or oracle contradictions, 2 when
/// every verdict is undetermined.
#[derive(Parser, Debug)]
#[command(name = "tau", version)]
struct Args {
    verb: Cmd,
    #[arg(long)]
    problem: PathBuf,
    /// Level horizon for verdicts, scans and tower checks.
    #[arg(long)]
    horizon: Option<usize>,
    /// Torsion level N, or number of exponential terms J.
    #[arg(long)]
    tprec: Option<usize>,
    /// Default u-adic precision.
    #[arg(long, value_parser = rational)]
    uprec: Option<Q>,
    #[arg(long)]
    denom_cap: Option<i64>,
    #[arg(long)]
    json_out: Option<PathBuf>,
    #[arg(long)]
    tsv_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let src = match fs::read_to_string(&args.problem) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", args.problem.display());
            return ExitCode::from(1);
        }
    };
    let ov = Overrides { horizon: args.horizon, tprec: args.tprec, uprec: args.uprec, denom_cap: args.denom_cap };
    let outcome = ProblemFile::parse(&src).and_then(|pf| run_problem(&pf, Some(args.verb.into()), &ov));
    let out = match outcome {
        Ok(o) => o,
        Err(Error::Parse { line, col, msg }) => {
            eprintln!("error: {}:{line}:{col}: {msg}", args.problem.display());
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let write = |path: &Option<PathBuf>, body: &str| -> bool {
        match path {
            Some(p) => fs::write(p, body).map_err(|e| eprintln!("error: {}: {e}", p.display())).is_ok(),
            None => {
                print!("{body}");
                true
            }
        }
    };
    if !write(&args.json_out, &out.json) {
        return ExitCode::from(1);
    }
    if let (Some(tsv), Some(_)) = (&out.tsv, &args.tsv_out) {
        if !write(&args.tsv_out, tsv) {
            return ExitCode::from(1);
        }
    }
    for f in &out.hard_failures {
        eprintln!("error: {f}");
    }
    if !out.hard_failures.is_empty() {
        ExitCode::from(1)
    } else if out.only_undetermined() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

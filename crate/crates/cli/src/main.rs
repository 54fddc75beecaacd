//! `bihsolve --config run.toml --out results/`

use std::path::PathBuf;
use std::process::ExitCode;

use bihsolve::config::RunConfig;
use bihsolve::run::{exit_code_for, run};
use clap::Parser;

/// Boundary-integral solver for the biharmonic (1-3)-problem in corner domains.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json, the CSV table and summary.txt.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Progress messages on stderr.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    let outcome = run(&cfg, &args.out, args.verbose);
    print!("{}", outcome.summary);
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    for a in &outcome.artifacts {
        eprintln!("wrote {}", a.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}

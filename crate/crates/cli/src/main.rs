//! Experiment driver. Subcommands run one suite each against a JSON config
//! and write `report.json` plus per-suite CSV tables into the output
//! directory. Exit codes: 0 all checks passed (indeterminate included),
//! 1 at least one check failed, 2 usage or configuration error.

mod config;
mod context;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use context::SuiteContext;
use report::SuiteReport;

#[derive(Parser)]
#[command(name = "arbor", version, about = "Certified potential theory on trees: experiment suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and CSV tables.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact-identity suite: multiplicativity, normalization, stochasticity.
    Identities(RunArgs),
    /// Lemma suites: hitting products, occupation, lower bounds, Green ratio.
    Lemmas(RunArgs),
    /// Fatou co-occurrence experiment over sampled boundary rays.
    Fatou(RunArgs),
    /// Ad-hoc walk simulation with path and stats export.
    Simulate(RunArgs),
}

fn run(args: &RunArgs, suite: fn(&SuiteContext, &std::path::Path) -> anyhow::Result<SuiteReport>) -> anyhow::Result<i32> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.simulation.seed);
    let ctx = SuiteContext::build(cfg, seed)?;
    let report = suite(&ctx, &args.out)?;
    report.write(&args.out)?;
    for c in &report.checks {
        let status = match c.status {
            report::Status::Pass => "pass",
            report::Status::Fail => "FAIL",
            report::Status::Indeterminate => "indeterminate",
        };
        println!("{status}: {} (value {}, target {})", c.name, c.value, c.target);
    }
    println!(
        "{}: {} passed, {} failed, {} indeterminate",
        report.suite, report.n_pass, report.n_fail, report.n_indeterminate
    );
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Identities(a) => run(a, suites::identities::run),
        Command::Lemmas(a) => run(a, suites::lemmas::run),
        Command::Fatou(a) => run(a, suites::fatou::run),
        Command::Simulate(a) => run(a, suites::simulate::run),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

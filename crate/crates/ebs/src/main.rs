use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ebs::check::{check_params, format_report};
use ebs::{load_scenario, run_experiment, RunOptions};

/// Emergent broadcast slot simulator.
#[derive(Parser)]
#[command(name = "ebs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's base values, once per seed.
    Run(RunArgs),
    /// Run every point of the scenario's `[sweep]` section.
    Sweep(RunArgs),
    /// Print stability and parameter bounds for the scenario.
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    /// Base seed, replacing `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write a newline-delimited event trace per run.
    #[arg(long)]
    trace: bool,
    /// Concurrent runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct CheckArgs {
    scenario: PathBuf,
    /// Exit with status 3 when the configuration is unstable.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> ebs::Result<ExitCode> {
    match cli.command {
        Command::Run(a) => experiment(a, false),
        Command::Sweep(a) => experiment(a, true),
        Command::Check(a) => {
            let cfg = load_scenario(&a.scenario)?;
            let report = check_params(&cfg)?;
            print!("{}", format_report(&cfg, &report));
            Ok(if a.strict && !report.stable {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            })
        }
    }
}

fn experiment(a: RunArgs, sweep: bool) -> ebs::Result<ExitCode> {
    let cfg = load_scenario(&a.scenario)?;
    let opts = RunOptions {
        out: a.out,
        seed: a.seed,
        trace: a.trace,
        jobs: a.jobs,
        sweep,
    };
    let report = run_experiment(&cfg, &opts)?;
    println!("sweep,value,protocol,seeds,duty_pct,thr_pct");
    for r in &report.summary {
        println!(
            "{},{},{},{},{:.2},{:.2}",
            r.sweep, r.value, r.protocol, r.seeds, r.duty_pct, r.thr_pct
        );
    }
    eprintln!("wrote {} files to {}", report.files.len(), opts.out.display());
    Ok(ExitCode::SUCCESS)
}

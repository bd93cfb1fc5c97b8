use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use impactlab_cli::{default_output, dispatch, render, Command, RunManifest};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Simulate,
    Impact,
    Decay,
    Reverse,
    Crossover,
    Estimate,
    Kyle,
    Variance,
    Theory,
    Validate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Impact => Command::Impact,
            Cmd::Decay => Command::Decay,
            Cmd::Reverse => Command::Reverse,
            Cmd::Crossover => Command::Crossover,
            Cmd::Estimate => Command::Estimate,
            Cmd::Kyle => Command::Kyle,
            Cmd::Variance => Command::Variance,
            Cmd::Theory => Command::Theory,
            Cmd::Validate => Command::Validate,
        }
    }
}

/// Monte-Carlo and closed-form market-impact experiments.
#[derive(Debug, Parser)]
#[command(name = "impactlab", version)]
struct Args {
    command: Cmd,
    /// `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $IMPACTLAB_OUT, else ./impactlab_out)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores
    #[arg(long)]
    workers: Option<usize>,
    /// Override a config key, `key=value`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Curve for the theory command
    #[arg(long)]
    curve: Option<String>,
    /// Record grid `lo:hi:log` or `lo:hi:lin`
    #[arg(long)]
    grid: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let manifest = RunManifest {
        command: args.command.into(),
        config_path: args.config,
        output_path: default_output(args.out),
        overrides: args.overrides,
        seed: args.seed,
        workers: args.workers,
        grid: args.grid,
        curve: args.curve,
    };
    match dispatch(&manifest) {
        Ok(report) => {
            print!("{}", render(&report, None));
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(2)
        }
    }
}

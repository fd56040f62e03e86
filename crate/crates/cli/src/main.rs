use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hetmimo_cli::{cmd_run, cmd_validate, RunArgs, ValidateArgs};

/// Monte Carlo simulator for heterogeneous, cellular and cell-free massive MIMO.
#[derive(Parser)]
#[command(name = "hetmimo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte Carlo campaigns and write results.
    Run(RunArgs),
    /// Compare closed forms against simulation on small built-in instances.
    Validate(ValidateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Validate(args) => cmd_validate(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

use std::process::ExitCode;

use clap::Parser;

mod commands;
mod error;
mod input;
mod output;

/// Simulator for iterated post-selection GHZ distillation.
#[derive(Debug, Parser)]
#[command(name = "ghz-distill", version, about)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

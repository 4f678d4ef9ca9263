mod args;
mod commands;
mod error;
mod inputs;
mod manifest;
mod report;
mod svg;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    // clap exits with status 2 on usage errors.
    let cli = args::Cli::parse();
    match commands::run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

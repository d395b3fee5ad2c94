use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = stylus::cli::Cli::parse();
    match stylus::cli::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

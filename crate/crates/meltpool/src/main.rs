use std::process::ExitCode;

use clap::Parser;
use meltpool::cli::{self, Cli};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let parsed = Cli::parse();
    match cli::execute(&parsed, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}

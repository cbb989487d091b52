use std::process::ExitCode;

use clap::Parser;
use wauc::cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wauc: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

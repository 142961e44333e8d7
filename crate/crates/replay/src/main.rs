use std::process::ExitCode;

use clap::Parser;
use parley_replay::cli::{run, Cli};

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    match run(Cli::parse(), &mut stdout) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

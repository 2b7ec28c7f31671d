use std::process::ExitCode;

use clap::Parser;
use lpwan_lifetime_cli::app::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lpwan-lt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

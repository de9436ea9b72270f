use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = twr_cli::Cli::parse();
    match twr_cli::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("twrsim: {e:#}");
            ExitCode::from(twr_cli::exit_code_for(&e))
        }
    }
}

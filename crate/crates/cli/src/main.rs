use std::process::ExitCode;

use clap::Parser;
use randevol_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match randevol_cli::run(cli) {
        Ok(summary) => {
            print!("{}", summary.text());
            if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

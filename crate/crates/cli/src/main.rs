use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ipsd_cli::Cli::parse();
    match ipsd_cli::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: check failed; see {}", cli.command.name(), cli.out.display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use symfit_cli::args::Cli;
use symfit_cli::error::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match symfit_cli::run(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let written = match &outcome.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(outcome.text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match outcome.status {
        Some(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        None => ExitCode::SUCCESS,
    }
}

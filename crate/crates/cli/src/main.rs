use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mrsa::config::OUT_DIR_ENV;
use mrsa::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = mrsa::error::CliError::validation(e.to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(1);
        }
    };
    match cli.execute(std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)) {
        Ok(text) => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use dfp_cli::{init_logging, run, Cli, ExitStatus};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitStatus::Success,
                _ => ExitStatus::Usage,
            }
            .into();
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitStatus::Success.into(),
        Err(err) => {
            eprintln!("error: {err}");
            ExitStatus::of(&err).into()
        }
    }
}

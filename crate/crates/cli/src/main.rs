use std::process::ExitCode;

use clap::Parser;
use ddm_cli::error::{EXIT_ACCEPT, EXIT_REJECT, EXIT_USAGE};
use ddm_cli::{run, Cli, Outcome};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_ACCEPT });
        }
    };
    match cli.command.resolve().and_then(|config| run(&config)) {
        Ok(Outcome::Accept) => ExitCode::from(EXIT_ACCEPT),
        Ok(Outcome::Reject) => ExitCode::from(EXIT_REJECT),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(&e)
        }
    }
}

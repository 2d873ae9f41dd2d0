use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = chunktagger_cli::Cli::parse();
    let stdout = std::io::stdout();
    match chunktagger_cli::run(cli, &mut stdout.lock()) {
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

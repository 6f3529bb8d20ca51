use std::process::ExitCode;

use clap::Parser;
use magswim::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match magswim::run(&cli) {
        Ok(code) => code.into(),
        Err(f) => {
            eprintln!("error: {f}");
            f.code.into()
        }
    }
}

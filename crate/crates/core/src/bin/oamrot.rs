use std::process::ExitCode;

use clap::Parser;
use oam_magnetometry::cli::{execute, exit_code, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oamrot: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

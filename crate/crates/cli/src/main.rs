mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Bad flags, config or parameters (exit 2).
#[derive(Debug)]
pub struct Validation(pub String);

impl std::fmt::Display for Validation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Validation {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Validation>().is_some() {
        return 2;
    }
    match e.downcast_ref::<dpsoliton::Error>() {
        Some(d) if d.is_validation() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Profile(c) => commands::profile(c),
        Command::Spectrum(c) => commands::spectrum(c),
        Command::Gap(c) => commands::gap(c),
        Command::Evans(c) => commands::evans(c),
        Command::Winding(c) => commands::winding(c),
        Command::Lax(c) => commands::lax(c),
        Command::Kernel(c) => commands::kernel(c),
        Command::FreeEvolve(c) => commands::free_evolve(c),
        Command::LinearEvolve(c) => commands::linear_evolve(c),
        Command::NonlinearEvolve(c) => commands::nonlinear_evolve(c),
        Command::Selftest(c) => commands::selftest(c),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

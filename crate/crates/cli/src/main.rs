//! `rubberroll`: simulation, bifurcation diagrams, rotation numbers,
//! resonance curves, classification and self-verification for an ellipsoid
//! of revolution rolling on a plane without slipping or spinning.

mod args;
mod commands;
mod error;
mod output;

use args::{Cli, Command, Common};
use clap::error::ErrorKind;
use clap::Parser;
use error::{CliError, CliResult, EXIT_INPUT};
use std::process::ExitCode;

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Simulate(a) => &a.common,
        Command::Bifurcation(a) => &a.common,
        Command::RotationNumber(a) => &a.common,
        Command::Resonance(a) => &a.common,
        Command::Classify(a) => &a.common,
        Command::Verify(a) => &a.common,
    }
}

fn configure_threads(cmd: &Command) -> CliResult<()> {
    let settings = args::Settings::load(common(cmd))?;
    if let Some(n) = settings.jobs()? {
        if n == 0 {
            return Err(CliError::Input("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot start {n} worker threads: {e}")))?;
    }
    Ok(())
}

fn dispatch(cmd: &Command) -> CliResult<()> {
    configure_threads(cmd)?;
    match cmd {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Bifurcation(a) => commands::bifurcation::run(a),
        Command::RotationNumber(a) => commands::rotation::run_rotation(a),
        Command::Resonance(a) => commands::rotation::run_resonance(a),
        Command::Classify(a) => commands::rotation::run_classify(a),
        Command::Verify(a) => commands::verify::run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RUBBERROLL_LOG", "warn"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT as u8),
            };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Input(_)) {
                eprintln!("run `rubberroll help` for usage");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

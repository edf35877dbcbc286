//! Error type of the command-line tool and its exit codes.

use rubberroll_core::Error as EngineError;
use thiserror::Error;

/// Exit code for invalid input (parameters, flags, configuration, files).
pub const EXIT_INPUT: i32 = 1;
/// Exit code for numerical failures.
pub const EXIT_NUMERIC: i32 = 2;
/// Exit code when `verify` finds a failing check.
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Engine(#[from] EngineError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0} verification check(s) failed")]
    Verify(usize),
}

impl CliError {
    /// True when the reader of our output went away (e.g. `| head`).
    pub fn is_broken_pipe(&self) -> bool {
        let kind = match self {
            CliError::Io(e) => Some(e.kind()),
            CliError::Json(e) => e.io_error_kind(),
            CliError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e.kind()),
                _ => None,
            },
            _ => None,
        };
        kind == Some(std::io::ErrorKind::BrokenPipe)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => {
                EXIT_INPUT
            }
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Engine(e) => match e {
                EngineError::InvalidParams(_)
                | EngineError::NonUnitGamma(_)
                | EngineError::ThetaOutOfRange(_)
                | EngineError::Gamma3OutOfRange(_)
                | EngineError::PoleState
                | EngineError::InvalidState(_)
                | EngineError::OutsideRpm { .. }
                | EngineError::NoSuchBranch { .. }
                | EngineError::NotFixedPoint(_)
                | EngineError::EquatorOrPole
                | EngineError::Inadmissible(_)
                | EngineError::RequiresBalanced
                | EngineError::Config(_) => EXIT_INPUT,
                _ => EXIT_NUMERIC,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

//! Reproducible simulation, inversion and verification runs driven by JSON
//! configs.

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

use std::fmt;

use boolmodel::error::Error;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const BUDGET: i32 = 3;
}

/// A run that did not produce a passing result.
#[derive(Debug)]
pub enum Failure {
    /// Bad config, unreadable or malformed input files.
    Input(String),
    /// A check or tolerance was not met.
    Check(String),
    /// Budget, precision or identifiability limits were hit.
    Budget(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => exit::INPUT,
            Failure::Check(_) => exit::CHECK_FAILED,
            Failure::Budget(_) => exit::BUDGET,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Budget(m) => write!(f, "budget or precision failure: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::BudgetExceeded { .. }
            | Error::PrecisionFailure { .. }
            | Error::NumericConditioning { .. }
            | Error::IllPosed { .. } => Failure::Budget(msg),
            _ => Failure::Input(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

pub type Outcome<T> = Result<T, Failure>;

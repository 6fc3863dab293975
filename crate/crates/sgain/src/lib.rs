//! File formats, reports and commands for the `sgain` binary.

pub mod commands;
pub mod config;
pub mod export;
pub mod report;
pub mod sweep;

use std::fmt;

use sgain_core::Error;

/// Version tag written into every config, report and certificate.
pub const SCHEMA: &str = "sgain/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Input = 1,
    Assumption = 2,
    SmallGain = 3,
    Verification = 4,
}

impl ExitCode {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// An error carrying the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: ExitCode,
    pub message: String,
}

impl Failure {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Input, message)
    }

    pub fn from_core(e: Error) -> Self {
        let code = match e {
            Error::SmallGainViolated(_) | Error::CannotCertify(_) => ExitCode::SmallGain,
            Error::InvalidCertificate(_) => ExitCode::Verification,
            _ => ExitCode::Input,
        };
        Self::new(code, e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

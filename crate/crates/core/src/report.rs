//! Machine-readable reports shared by the library checks and the CLI.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Error;

/// One named check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, details: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            passed,
            details: details.into(),
        }
    }

    pub fn pass(name: impl Into<String>, details: impl Into<String>) -> Self {
        Self::new(name, true, details)
    }

    pub fn fail(name: impl Into<String>, details: impl Into<String>) -> Self {
        Self::new(name, false, details)
    }
}

pub fn all_passed(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(|v| v.passed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "i32")]
pub enum ExitCode {
    Pass,
    VerdictFailure,
    HypothesisViolation,
    PrecisionExhausted,
    Usage,
}

impl From<ExitCode> for i32 {
    fn from(code: ExitCode) -> i32 {
        match code {
            ExitCode::Pass => 0,
            ExitCode::VerdictFailure => 1,
            ExitCode::HypothesisViolation => 2,
            ExitCode::PrecisionExhausted => 3,
            ExitCode::Usage => 64,
        }
    }
}

impl ExitCode {
    pub fn for_error(err: &Error) -> Self {
        match err {
            Error::PrecisionExhausted(_) => ExitCode::PrecisionExhausted,
            Error::HypothesisFailed(_) | Error::NoBreak(_) | Error::RankTooLarge { .. } => {
                ExitCode::HypothesisViolation
            }
            Error::Parse(_) | Error::InvalidMu(_) | Error::InvalidParams(_) => ExitCode::Usage,
            _ => ExitCode::VerdictFailure,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub input_digest: String,
    pub verdicts: Vec<Verdict>,
    pub achieved_precision: Option<u32>,
    pub data: Value,
    pub exit_code: ExitCode,
}

impl Report {
    /// Exit code 0 exactly when every verdict passes.
    pub fn new(
        command: &str,
        input: &[u8],
        verdicts: Vec<Verdict>,
        achieved_precision: Option<u32>,
        data: Value,
    ) -> Self {
        let exit_code = if all_passed(&verdicts) {
            ExitCode::Pass
        } else {
            ExitCode::VerdictFailure
        };
        Report {
            command: command.to_string(),
            input_digest: digest(input),
            verdicts,
            achieved_precision,
            data,
            exit_code,
        }
    }

    /// A report for an operation that stopped with an error.
    pub fn from_error(command: &str, input: &[u8], err: &Error) -> Self {
        let code = ExitCode::for_error(err);
        let name = match code {
            ExitCode::PrecisionExhausted => "precision",
            ExitCode::HypothesisViolation => "hypothesis",
            ExitCode::Usage => "input",
            _ => "error",
        };
        Report {
            command: command.to_string(),
            input_digest: digest(input),
            verdicts: vec![Verdict::fail(name, err.to_string())],
            achieved_precision: None,
            data: Value::Null,
            exit_code: code,
        }
    }

    pub fn with_exit_code(mut self, code: ExitCode) -> Self {
        self.exit_code = code;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

use std::fmt;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Exit status 2: bad arguments or unreadable input.
pub const EXIT_USAGE: i32 = 2;
/// Exit status 1: the command ran and a check failed.
pub const EXIT_CHECK: i32 = 1;

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<stoqwalk_core::Error> for UsageError {
    fn from(e: stoqwalk_core::Error) -> Self {
        UsageError(e.to_string())
    }
}

impl From<std::io::Error> for UsageError {
    fn from(e: std::io::Error) -> Self {
        UsageError(e.to_string())
    }
}

pub type CliResult<T> = Result<T, UsageError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Pass,
    Fail,
}

impl Status {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Source {
    pub path: String,
    pub sha256: String,
}

impl Source {
    pub fn new(path: &Path, bytes: &[u8]) -> Self {
        Source {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

/// Structured output of one command. Holds nothing that varies between
/// runs with the same arguments and seed.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub status: Status,
    pub result: serde_json::Value,
}

/// A finished command: its report plus the human-readable rendering.
pub struct Output {
    pub report: Report,
    pub text: String,
}

impl Output {
    pub fn exit_code(&self) -> i32 {
        match self.report.status {
            Status::Fail => EXIT_CHECK,
            _ => 0,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("report values serialize")
}

pub fn render(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

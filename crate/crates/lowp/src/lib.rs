//! Standard-library companion to `lowp-core`: tensor files, JSON
//! quantization configs, format spec strings, a multi-threaded fused
//! kernel, the benchmark harness and the `lowp` command line.

use std::fmt;

pub mod bench;
pub mod cli;
pub mod config;
pub mod parallel;
pub mod spec;
pub mod tensorfile;

/// A validation failure tied to the input key that caused it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub key: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl std::error::Error for Diagnostic {}

impl From<lowp_core::Error> for Diagnostic {
    fn from(e: lowp_core::Error) -> Self {
        match e {
            lowp_core::Error::InvalidFormat { field, message } => Diagnostic::new(field, message),
            other => Diagnostic::new("input", other.to_string()),
        }
    }
}

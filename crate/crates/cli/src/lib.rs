//! Orchestration behind the `ccm` binary: configuration, the analysis
//! pipeline, the oracle validation report and CSV emission.

pub mod config;
pub mod pipeline;
pub mod repro;
pub mod table;

use std::fmt;

/// Why a command failed, which fixes the process exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad or unreadable configuration (exit 3).
    Config(String),
    /// An analysis step failed (exit 1).
    Module(String),
    /// Subspace results disagree with the oracle beyond tolerance (exit 2).
    Validation(String),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(msg.into())
    }

    pub fn module(msg: impl Into<String>) -> Self {
        Failure::Module(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Module(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Config(_) => 3,
        }
    }

    /// Prefixes the message with `what: `.
    pub fn context(self, what: impl fmt::Display) -> Self {
        match self {
            Failure::Config(m) => Failure::Config(format!("{what}: {m}")),
            Failure::Module(m) => Failure::Module(format!("{what}: {m}")),
            Failure::Validation(m) => Failure::Validation(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Module(m) => write!(f, "error: {m}"),
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Module(format!("{e:#}"))
    }
}

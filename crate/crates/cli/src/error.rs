use std::process::ExitCode;

use thiserror::Error;

use crate::config::Violation;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config is not valid JSON: {0}")]
    Parse(String),
    #[error("config schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("config violates {} invariant(s):\n{}", .0.len(), list(.0))]
    Invariant(Vec<Violation>),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] dynatomo::Error),
    #[error("golden mismatch in {} entr(ies):\n{}", .0.len(), .0.join("\n"))]
    GoldenMismatch(Vec<String>),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

fn list(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Parse(_) | CliError::Schema { .. } | CliError::Invariant(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::CheckFailed(_) => 3,
            CliError::GoldenMismatch(_) => 4,
        })
    }
}

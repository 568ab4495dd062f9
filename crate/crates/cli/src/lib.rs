//! Command-line companion to the solver core: run configs, the
//! simulate/check/average commands, and the artifact encodings (CSV, JSONL,
//! binary checkpoints). The binary in `main.rs` is a thin dispatcher over
//! [`commands`].

pub mod commands;
pub mod config;
pub mod io;

/// Process-level failure carrying the exit-code contract:
/// 1 invariant failure, 2 validation error, 3 numerical abort.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<dm4nls_core::Error> for CliError {
    fn from(e: dm4nls_core::Error) -> Self {
        use dm4nls_core::Error as E;
        let code = match &e {
            E::NonFinite(_) | E::NonContractive { .. } | E::StepAborted { .. } => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

//! CLI error type and the exit-code contract.
//!
//! Exit 0: the requested procedure ran. Exit 1: the inputs are malformed
//! (parse errors, shape mismatches, unknown files). Exit 2: the inputs
//! parsed but the requested statistic is undefined for them (degenerate
//! tests, tied tournaments, blown enumeration budgets) — a condition the
//! caller may want to branch on separately from bad data.

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed input: file contents, flag combinations, schema problems.
    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A statistics-layer failure; carries the undefined-procedure flag.
    #[error(transparent)]
    Stat(#[from] ranksignal::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Stat(e) if e.is_undefined_procedure() => 2,
            _ => 1,
        }
    }
}

/// Read a file with the path attached to any failure.
pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write a file with the path attached to any failure.
pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

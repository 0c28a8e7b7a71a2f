use std::io;
use std::path::{Path, PathBuf};

use lmc_core::LmcError;
use thiserror::Error;

/// Process exit statuses. These are part of the command-line contract.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const INTEGRITY: i32 = 3;
    pub const SHAPE: i32 = 4;
    pub const MISSING: i32 = 5;
    pub const CONFIG: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Codec(#[from] LmcError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Integrity(String),

    #[error("{0}")]
    Shape(String),

    #[error("{0}")]
    Missing(String),

    #[error("{0}")]
    Config(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Codec(e) => match e {
                LmcError::Integrity { .. }
                | LmcError::CorruptStream(_)
                | LmcError::UnsupportedFormat(_)
                | LmcError::MalformedCodebook(_) => exit::INTEGRITY,
                LmcError::ShapeMismatch { .. } | LmcError::TypeMismatch { .. } => exit::SHAPE,
                LmcError::InvalidConfig(_) => exit::CONFIG,
                LmcError::Io(e) if e.kind() == io::ErrorKind::NotFound => exit::MISSING,
                _ => exit::INPUT,
            },
            CliError::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => {
                exit::MISSING
            }
            CliError::Io { .. } | CliError::Input(_) => exit::INPUT,
            CliError::Integrity(_) => exit::INTEGRITY,
            CliError::Shape(_) => exit::SHAPE,
            CliError::Missing(_) => exit::MISSING,
            CliError::Config(_) => exit::CONFIG,
        }
    }
}

pub(crate) fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_by_kind() {
        let integrity = CliError::from(LmcError::Integrity {
            expected: 1,
            actual: 2,
        });
        assert_eq!(integrity.exit_code(), exit::INTEGRITY);
        assert_eq!(
            CliError::from(LmcError::UnsupportedFormat("x".into())).exit_code(),
            exit::INTEGRITY
        );
        assert_eq!(
            CliError::from(LmcError::ShapeMismatch { left: 1, right: 2 }).exit_code(),
            exit::SHAPE
        );
        assert_eq!(
            CliError::from(LmcError::InvalidConfig("x".into())).exit_code(),
            exit::CONFIG
        );
        assert_eq!(CliError::from(LmcError::EmptyInput).exit_code(), exit::INPUT);
        let missing = CliError::io(Path::new("a"), io::ErrorKind::NotFound.into());
        assert_eq!(missing.exit_code(), exit::MISSING);
        let denied = CliError::io(Path::new("a"), io::ErrorKind::PermissionDenied.into());
        assert_eq!(denied.exit_code(), exit::INPUT);
    }
}

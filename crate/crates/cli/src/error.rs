use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numerical contract violated: {0}")]
    Numerical(tomokit::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<tomokit::Error> for CliError {
    fn from(e: tomokit::Error) -> Self {
        use tomokit::Error as E;
        match e {
            E::Parse(_) | E::InvalidRange { .. } | E::InvalidCount(_) | E::ShapeMismatch { .. } => {
                CliError::Config(e.to_string())
            }
            E::Io(msg) => CliError::Io { path: PathBuf::new(), source: std::io::Error::other(msg) },
            other => CliError::Numerical(other),
        }
    }
}

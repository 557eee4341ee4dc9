use serde::Serialize;
use thiserror::Error;

/// Failure of a command, classified by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Convergence(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Convergence(_) => "convergence",
            CliError::Io(_) => "io",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

impl From<mpass::Error> for CliError {
    fn from(e: mpass::Error) -> Self {
        use mpass::Error as E;
        match e {
            E::NotConverged { .. } | E::Stagnated { .. } => CliError::Convergence(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Contents of `error.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let stagnated: CliError = mpass::Error::Stagnated {
            sweeps: 0,
            max_energy: 1.0,
        }
        .into();
        assert_eq!(stagnated.exit_code(), 3);
        let invalid: CliError = mpass::Error::InvalidParameter("x".into()).into();
        assert_eq!(invalid.exit_code(), 2);
        let io: CliError = std::io::Error::other("disk").into();
        assert_eq!(io.report().error, "io");
        assert_eq!(io.report().exit_code, 4);
    }
}

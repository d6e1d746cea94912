use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pked_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{}: {msg}", path.display())]
    Table { path: PathBuf, msg: String },
}

pub type Result<T, E = ExpError> = std::result::Result<T, E>;

impl ExpError {
    /// Process exit code: 2 for bad input, 3 for budget overruns, 4 for
    /// violated invariants and solver failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        use pked_core::Error as E;
        match self {
            ExpError::Config(_) => 2,
            ExpError::Core(E::InvalidArgument(_) | E::DimensionMismatch { .. }) => 2,
            ExpError::Core(E::BudgetExceeded(_)) => 3,
            ExpError::Core(_) => 4,
            ExpError::Table { .. } => 2,
            ExpError::Io(_) | ExpError::Csv(_) | ExpError::Json(_) => 1,
        }
    }
}

pub(crate) fn config_err(msg: impl Into<String>) -> ExpError {
    ExpError::Config(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pked_core::Error as E;

    #[test]
    fn exit_codes() {
        assert_eq!(config_err("x").exit_code(), 2);
        assert_eq!(ExpError::Core(E::InvalidArgument("x".into())).exit_code(), 2);
        assert_eq!(ExpError::Core(E::BudgetExceeded("x".into())).exit_code(), 3);
        assert_eq!(ExpError::Core(E::Invariant("x".into())).exit_code(), 4);
        assert_eq!(ExpError::Core(E::Eigensolver("x".into())).exit_code(), 4);
        assert_eq!(ExpError::Io(std::io::Error::other("x")).exit_code(), 1);
    }
}

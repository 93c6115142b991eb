use std::path::PathBuf;

use frachardy::FracError;

use crate::expr::ParseError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid expression: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid parameter {param}: {msg}")]
    Param { param: &'static str, msg: String },
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn param(param: &'static str, msg: impl Into<String>) -> Self {
        CliError::Param { param, msg: msg.into() }
    }

    /// 0 success, 1 domain or validation error, 2 numerical nonconvergence, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Frac(e) if e.is_numerical() => 2,
            CliError::Io { .. } => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

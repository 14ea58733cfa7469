use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, parameters or output location. Exit code 2.
    #[error("{0}")]
    Input(String),

    /// The numerics failed on valid input. Exit code 3.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<stochstab::Error> for CliError {
    fn from(e: stochstab::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

/// Failing to write into the output directory is a configuration problem.
pub fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("cannot write {}: {e}", path.display()))
}

use thiserror::Error;

/// Crate-wide error type. The discriminants map onto process exit codes in
/// the CLI: input/accuracy problems exit with 2, verification failures with
/// 3, and dynamics failures with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: bad configuration values, malformed files, or a
    /// requested accuracy that the solver could not certify.
    #[error("input error: {0}")]
    Input(String),

    /// A verification check failed: an invariant of the profile, the norms,
    /// or the operator does not hold at the requested tolerance.
    #[error("check failed: {0}")]
    Check(String),

    /// A dynamics run failed: the time stepper lost positivity, the
    /// smallness gate was violated, or a linear solve broke down.
    #[error("dynamics error: {0}")]
    Dynamics(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Io(_) => 2,
            Error::Check(_) => 3,
            Error::Dynamics(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

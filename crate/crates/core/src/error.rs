use thiserror::Error;

/// Failure modes shared by every module of the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Mutually inconsistent configuration (path length, grid sizes, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// A documented precondition on the input data does not hold.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A numerical scheme failed to reach its convergence gate.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// The computed spectrum does not reach far enough for the requested statistic.
    #[error("incomplete spectrum: {0}")]
    Incomplete(String),
    /// Every Monte-Carlo sample rounded to zero in linear space.
    #[error("underflow: {0}")]
    Underflow(String),
}

impl LabError {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Domain(_) | LabError::Config(_) | LabError::Contract(_) => 1,
            LabError::Resolution(_) | LabError::Incomplete(_) | LabError::Underflow(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn require(cond: bool, err: impl FnOnce() -> LabError) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(err())
    }
}

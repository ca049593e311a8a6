use std::fmt;

use daub_core::RunError;

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Anything not covered below, including failed verification checks.
    Other,
    /// Unreadable or invalid configuration, bad flags, mismatched inputs.
    Config,
    /// Learner failures that abort the run.
    LearnerAbort,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Other => 1,
            ExitKind::Config => 2,
            ExitKind::LearnerAbort => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub inner: anyhow::Error,
}

impl CliError {
    pub fn new(kind: ExitKind, inner: impl Into<anyhow::Error>) -> Self {
        Self {
            kind,
            inner: inner.into(),
        }
    }

    pub fn config(inner: impl Into<anyhow::Error>) -> Self {
        Self::new(ExitKind::Config, inner)
    }

    pub fn learner(inner: impl Into<anyhow::Error>) -> Self {
        Self::new(ExitKind::LearnerAbort, inner)
    }

    pub fn other(inner: impl Into<anyhow::Error>) -> Self {
        Self::new(ExitKind::Other, inner)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.inner)
    }
}

impl std::error::Error for CliError {}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        let kind = match e {
            RunError::AllLearnersFailed => ExitKind::LearnerAbort,
            RunError::Config(_) | RunError::ExactModeUnsupported(_) | RunError::NoLearners => {
                ExitKind::Config
            }
            RunError::Bound(_) | RunError::Model(_) => ExitKind::Other,
        };
        Self::new(kind, e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attach an exit class to any error.
pub trait ExitContext<T> {
    fn exit(self, kind: ExitKind) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> ExitContext<T> for Result<T, E> {
    fn exit(self, kind: ExitKind) -> CliResult<T> {
        self.map_err(|e| CliError::new(kind, e))
    }
}

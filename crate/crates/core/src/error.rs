use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Overabundance { line: usize, message: String },

    #[error("invalid lexicon entry: {0}")]
    InvalidEntry(String),

    #[error("form {0:?} is not listed in the lexicon")]
    UnknownForm(String),

    #[error("tag {0:?} is not listed in the lexicon")]
    UnknownTag(String),

    #[error("feature {0} is not in the feature space")]
    FeatureNotInSpace(String),

    #[error("form {0:?} has zero marginal probability")]
    ZeroMarginal(String),

    #[error("no usable tokens after removing out-of-lexicon forms")]
    NoTokens,

    #[error("all {restarts} restarts diverged")]
    AllRestartsDiverged { restarts: usize },

    #[error("all {points} grid points failed")]
    AllGridPointsFailed { points: usize },

    #[error("objective became non-finite")]
    Diverged,

    #[error("only {found} distinct items found after {draws} draws, {requested} requested")]
    InsufficientSupport {
        requested: usize,
        found: usize,
        draws: u64,
    },

    #[error("{0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse failure classes, used by the command-line front end to pick an
/// exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Parse,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::Overabundance { .. }
            | Error::InvalidEntry(_)
            | Error::Checkpoint(_) => ErrorClass::Parse,
            Error::UnknownForm(_)
            | Error::UnknownTag(_)
            | Error::FeatureNotInSpace(_)
            | Error::InvalidArgument(_)
            | Error::InsufficientSupport { .. } => ErrorClass::Usage,
            Error::ZeroMarginal(_)
            | Error::NoTokens
            | Error::AllRestartsDiverged { .. }
            | Error::AllGridPointsFailed { .. }
            | Error::Diverged
            | Error::Numerical(_) => ErrorClass::Numerical,
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => ErrorClass::Usage,
            Error::Io(_) => ErrorClass::Io,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the physical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller asked for something the operation cannot do.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("arity error at line {line}: expected {expected} channels, found {found}")]
    Arity {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("stream error at line {line}: {msg}")]
    Stream { line: usize, msg: String },

    #[error("underdetermined fit: order {order} needs at least {needed} rows, got {rows}")]
    Underdetermined {
        order: usize,
        needed: usize,
        rows: usize,
    },

    #[error("singular fit at order {order}: design matrix is rank deficient")]
    SingularFit { order: usize },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: Option<PathBuf>,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 usage/config, 2 data or parse, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) | Error::Domain(_) => 1,
            Error::Parse { .. } | Error::Arity { .. } | Error::Stream { .. } | Error::Io { .. } => {
                2
            }
            Error::Underdetermined { .. } | Error::SingularFit { .. } => 3,
            Error::Context { source, .. } => source.exit_code(),
        }
    }

    /// Strips any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Self {
        Error::Io { path: None, source }
    }
}

pub(crate) fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io {
        path: Some(path),
        source,
    }
}

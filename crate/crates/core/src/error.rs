use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Input data does not satisfy an operation's precondition.
    #[error("input error: {0}")]
    Input(String),

    /// A file or document does not follow its format.
    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format_at_offset(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            location: format!("byte {offset}"),
            message: msg.into(),
        }
    }

    pub(crate) fn format_at(location: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            location: location.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

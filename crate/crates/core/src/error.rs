use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown label \"{label}\"")]
    UnknownLabel { line: usize, label: String },

    #[error("line {line}: duplicate document id \"{id}\"")]
    DuplicateDocument { line: usize, id: String },

    #[error("document \"{0}\" has no clauses")]
    EmptyDocument(String),

    /// A value failed a domain invariant. The first field names the offending field.
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("clause {position} of document \"{document}\" has no gold label")]
    MissingGold { document: String, position: usize },

    #[error("episode already reached its terminal state")]
    StepAfterTerminal,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("linear system is singular")]
    Singular,

    #[error("fold {fold} (repeat {repeat}): {source}")]
    Fold {
        repeat: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model file: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Whether the error stems from user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::UnknownLabel { .. }
            | Error::DuplicateDocument { .. }
            | Error::EmptyDocument(_)
            | Error::Invalid { .. }
            | Error::ConfigMismatch(_)
            | Error::MissingGold { .. }
            | Error::Model(_)
            | Error::Json(_) => true,
            Error::Fold { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

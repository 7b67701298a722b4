use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input at {position}: {message}")]
    MalformedInput { position: String, message: String },

    #[error("missing field `{field}` at {position}")]
    MissingField { field: &'static str, position: String },

    #[error("duplicate page id `{0}`")]
    DuplicatePageId(String),

    #[error("query is empty after normalization")]
    EmptyQuery,

    #[error("channel `{0}` is not in the channel directory")]
    MissingChannel(String),

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("feature arity mismatch: model expects {expected}, got {got}")]
    KindMismatch { expected: usize, got: usize },

    #[error("too few examples: {0}")]
    TooFewExamples(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("edge weight {weight} for ({show}, {page}) is outside [0, 1]")]
    WeightOutOfRange { show: String, page: String, weight: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn malformed(position: impl Into<String>, message: impl ToString) -> Self {
        Error::MalformedInput {
            position: position.into(),
            message: message.to_string(),
        }
    }

    /// True for failures caused by the content of the data rather than by
    /// I/O or configuration.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::InvalidArgument(_))
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MixselError>;

#[derive(Debug, Error)]
pub enum MixselError {
    /// Malformed input, criterion or experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("operation `{op}` is not supported for {kind} inputs")]
    Unsupported { op: &'static str, kind: &'static str },

    /// Asked for more mixture components than there are distinct support points.
    #[error("cannot fit {m} components to {distinct} distinct points")]
    InfeasibleOrder { m: usize, distinct: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl MixselError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        MixselError::Config(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        MixselError::Numeric(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            MixselError::Config(_) | MixselError::Json(_) | MixselError::Unsupported { .. } => 2,
            MixselError::InfeasibleOrder { .. } => 3,
            MixselError::Numeric(_) => 4,
            MixselError::Io(_) => 2,
        }
    }
}

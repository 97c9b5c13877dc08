use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("validation error at `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{0}")]
    NotFound(String),

    #[error("{0}")]
    Conflict(String),

    #[error("missing or wrong bearer token")]
    Unauthorized,

    #[error(transparent)]
    Engine(bayesadapt::Error),

    #[error("storage: {0}")]
    Io(#[from] std::io::Error),

    #[error("storage: {0}")]
    Json(#[from] serde_json::Error),
}

impl ServiceError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        ServiceError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Validation { .. } => "validation",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::Engine(bayesadapt::Error::InvalidArgument(_)) => "invalid_argument",
            ServiceError::Engine(_) | ServiceError::Io(_) | ServiceError::Json(_) => "internal",
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ServiceError::Validation { field, .. } => Some(field),
            _ => None,
        }
    }
}

impl From<bayesadapt::Error> for ServiceError {
    fn from(e: bayesadapt::Error) -> Self {
        match e {
            bayesadapt::Error::Validation { field, message } => ServiceError::Validation { field, message },
            other => ServiceError::Engine(other),
        }
    }
}

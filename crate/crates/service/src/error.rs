use resyduo_core::ProjectionKind;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no {0} model is loaded")]
    ModelUnavailable(ProjectionKind),
    #[error("none of the tags are known: {}", .0.join(", "))]
    UnknownTags(Vec<String>),
    #[error("none of the components are known: {}", .0.join(", "))]
    UnknownComponents(Vec<String>),
    #[error("the input shares no component with the project model")]
    InsufficientOverlap,
    #[error("unknown component ids: {}", .0.join(", "))]
    Validation(Vec<String>),
    #[error("project `{0}` not found")]
    NotFound(String),
    #[error(transparent)]
    Core(#[from] resyduo_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    /// Stable machine-readable code for the error payload.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::InvalidRequest(_) => "invalid_request",
            ServiceError::ModelUnavailable(_) => "model_unavailable",
            ServiceError::UnknownTags(_) => "unknown_tags",
            ServiceError::UnknownComponents(_) => "unknown_components",
            ServiceError::InsufficientOverlap => "insufficient_overlap",
            ServiceError::Validation(_) => "validation_error",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Core(resyduo_core::Error::InsufficientOverlap) => "insufficient_overlap",
            ServiceError::Core(_) | ServiceError::Io(_) => "internal_error",
        }
    }

    pub fn status(&self) -> u16 {
        match self.code() {
            "invalid_request" => 400,
            "not_found" => 404,
            "model_unavailable" => 503,
            "internal_error" => 500,
            _ => 422,
        }
    }
}

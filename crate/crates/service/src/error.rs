use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// Errors surfaced to API clients as `{code, message}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServiceError {
    /// Malformed or inconsistent request content.
    Validation(String),
    NotFound(String),
    /// The answered pair is neither the pending query nor an outstanding one.
    StaleQuery(String),
    /// The operation needs a resolved session.
    NotResolved,
    /// Export needs labels first.
    NotLabeled,
    /// The session no longer takes answers.
    NotActive(String),
    Escalated(String),
    AlreadyLabeled,
    Storage(String),
    Internal(String),
}

#[derive(Debug, Serialize)]
struct Body<'a> {
    code: &'a str,
    message: String,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Validation(_) => "validation",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::StaleQuery(_) => "stale_query",
            ServiceError::NotResolved => "not_resolved",
            ServiceError::NotLabeled => "not_labeled",
            ServiceError::NotActive(_) => "not_active",
            ServiceError::Escalated(_) => "escalated",
            ServiceError::AlreadyLabeled => "already_labeled",
            ServiceError::Storage(_) => "storage",
            ServiceError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::StaleQuery(_)
            | ServiceError::NotResolved
            | ServiceError::NotLabeled
            | ServiceError::NotActive(_)
            | ServiceError::Escalated(_)
            | ServiceError::AlreadyLabeled => StatusCode::CONFLICT,
            ServiceError::Storage(_) | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn message(&self) -> String {
        match self {
            ServiceError::Validation(m)
            | ServiceError::NotFound(m)
            | ServiceError::StaleQuery(m)
            | ServiceError::NotActive(m)
            | ServiceError::Storage(m)
            | ServiceError::Internal(m) => m.clone(),
            ServiceError::Escalated(why) => format!("session escalated: {why}"),
            ServiceError::NotResolved => "session is not resolved yet".into(),
            ServiceError::AlreadyLabeled => "session is already labeled".into(),
            ServiceError::NotLabeled => "session has no labels yet".into(),
        }
    }
}

impl std::fmt::Display for ServiceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code(), self.message())
    }
}

impl std::error::Error for ServiceError {}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Storage(e.to_string())
    }
}

impl From<acluster_core::Error> for ServiceError {
    fn from(e: acluster_core::Error) -> Self {
        use acluster_core::Error as E;
        match e {
            E::Escalated(why) => ServiceError::Escalated(why),
            E::UnknownStrategy(_) | E::ItemOutOfRange { .. } | E::SelfQuery(_) | E::EmptyGround => {
                ServiceError::Validation(e.to_string())
            }
            E::MalformedLog { .. } => ServiceError::Storage(e.to_string()),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = Body {
            code: self.code(),
            message: self.message(),
        };
        (self.status(), Json(body)).into_response()
    }
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;

//! The two-key `{"success", "message"}` response body.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

pub const INSERTED: &str = "Inserted";
pub const OOPS: &str = "Oops! An error occurred.";
pub const MISSING: &str = "Required field(s) is missing";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiResponse {
    pub success: u8,
    pub message: String,
}

impl ApiResponse {
    pub fn inserted() -> Self {
        ApiResponse { success: 1, message: INSERTED.into() }
    }

    pub fn oops() -> Self {
        ApiResponse { success: 0, message: OOPS.into() }
    }

    pub fn missing() -> Self {
        ApiResponse { success: 0, message: MISSING.into() }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        ApiResponse { success: 0, message: message.into() }
    }

    pub fn with_status(self, status: StatusCode) -> Response {
        (status, Json(self)).into_response()
    }
}

impl IntoResponse for ApiResponse {
    fn into_response(self) -> Response {
        Json(self).into_response()
    }
}

//! HTTP wire API and shared command plumbing.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clap::Args;
use serde::{Deserialize, Serialize};

use isu_dialog::info_state::PublicIS;
use isu_dialog::service::{DeploymentConfig, Reply, ServiceError, SessionManager, TurnRecord};

/// Data and lexicon locations shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// Terminology file (tab-separated records).
    #[arg(long)]
    pub terminology: Option<PathBuf>,
    /// Document index file (tab-separated records).
    #[arg(long)]
    pub documents: Option<PathBuf>,
    /// Plan library file.
    #[arg(long)]
    pub plans: Option<PathBuf>,
    /// Tag rule file.
    #[arg(long)]
    pub tag_rules: Option<PathBuf>,
    /// Template file.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub delta_min: Option<usize>,
    #[arg(long)]
    pub delta_max: Option<usize>,
}

impl DataArgs {
    pub fn config(&self) -> DeploymentConfig {
        DeploymentConfig {
            terminology: self.terminology.clone(),
            documents: self.documents.clone(),
            plans: self.plans.clone(),
            tag_rules: self.tag_rules.clone(),
            templates: self.templates.clone(),
            delta_min: self.delta_min,
            delta_max: self.delta_max,
            ..Default::default()
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub turn: TurnRecord,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::EmptyText => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Ended(_) => StatusCode::CONFLICT,
            ServiceError::Capacity(_) => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = Json(ErrorBody {
            error: self.0.to_string(),
        });
        if status == StatusCode::SERVICE_UNAVAILABLE {
            (status, [(header::RETRY_AFTER, "5")], body).into_response()
        } else {
            (status, body).into_response()
        }
    }
}

type Shared = Arc<SessionManager>;

async fn create(State(m): State<Shared>) -> Result<(StatusCode, Json<Created>), ApiError> {
    let (session_id, turn) = m.create()?;
    Ok((StatusCode::CREATED, Json(Created { session_id, turn })))
}

async fn utter(
    State(m): State<Shared>,
    Path(id): Path<String>,
    Json(u): Json<Utterance>,
) -> Result<Json<Reply>, ApiError> {
    Ok(Json(m.post(&id, &u.text)?))
}

async fn transcript(State(m): State<Shared>, Path(id): Path<String>) -> Result<Json<Vec<TurnRecord>>, ApiError> {
    Ok(Json(m.transcript(&id)?))
}

async fn state(State(m): State<Shared>, Path(id): Path<String>) -> Result<Json<PublicIS>, ApiError> {
    Ok(Json(m.state(&id)?))
}

async fn end(State(m): State<Shared>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    m.end(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

/// Routes of the wire API.
pub fn router(manager: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", axum::routing::delete(end))
        .route("/sessions/{id}/utterances", post(utter))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/state", get(state))
        .with_state(manager)
}

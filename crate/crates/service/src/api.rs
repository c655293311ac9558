//! JSON-over-HTTP front end for [`VenueService`].

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use stdreview_core::session::SessionAction;
use stdreview_core::tree::{Answer, ROOT_NODE};

use crate::workflow::{NewSubmission, ServiceError, TriageRequest, VenueService};

type Shared = Arc<VenueService>;

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/submissions", post(create_submission).get(list_submissions))
        .route("/submissions/{id}", get(get_submission))
        .route("/submissions/{id}/checklist", get(checklist))
        .route("/submissions/{id}/triage", post(triage))
        .route("/submissions/{id}/reviewers", post(reviewers))
        .route("/submissions/{id}/agreement", get(agreement))
        .route("/submissions/{id}/decision", post(decision))
        .route("/submissions/{id}/revision-check", post(revision_check))
        .route("/submissions/{id}/letter", get(letter))
        .route("/submissions/{id}/events", get(events))
        .route("/forms/{id}", get(form))
        .route("/sessions/{id}", get(session))
        .route("/sessions/{id}/answers", post(answer))
        .route("/sessions/{id}/marks", post(mark))
        .route("/sessions/{id}/comments", post(comment))
        .route("/sessions/{id}/complete", post(complete))
        .route("/sessions/{id}/reopen", post(reopen))
        .route("/sessions/{id}/log", get(session_log))
        .route("/initial-checks", get(initial_checks))
        .with_state(service)
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl ApiError {
    fn status(&self) -> StatusCode {
        use ServiceError::*;
        match &self.0 {
            NotFound { .. } => StatusCode::NOT_FOUND,
            DuplicateSubmission(_)
            | WrongState { .. }
            | SessionsIncomplete(_)
            | AwaitingThirdReviewer
            | CheckerMismatch { .. } => StatusCode::CONFLICT,
            Store(crate::store::StoreError::Conflict { .. }) => StatusCode::CONFLICT,
            Store(_) | Replay(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    fn code(&self) -> &'static str {
        use ServiceError::*;
        match &self.0 {
            NotFound { .. } => "not_found",
            InvalidId(_) => "invalid_id",
            DuplicateSubmission(_) => "duplicate_submission",
            UnknownStandardId(_) => "unknown_standard_id",
            Compose(_) => "compose_error",
            MissingChecks(_) => "missing_checks",
            ChecksFailed(_) => "checks_failed",
            AdhocItemsRequired => "adhoc_items_required",
            WrongState { .. } => "wrong_state",
            WrongReviewerCount { .. } => "wrong_reviewer_count",
            DuplicateReviewer(_) => "duplicate_reviewer",
            Session(_) => "session_error",
            SessionsIncomplete(_) => "sessions_incomplete",
            AwaitingThirdReviewer => "awaiting_third_reviewer",
            Decision(_) => "decision_error",
            Agreement(_) => "agreement_error",
            CheckerMismatch { .. } => "checker_mismatch",
            InvalidInput(_) => "invalid_input",
            Store(crate::store::StoreError::Conflict { .. }) => "version_conflict",
            Store(_) => "store_error",
            Replay(_) => "replay_error",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.code(), "message": self.0.to_string() });
        (self.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn ok<T: serde::Serialize>(value: T) -> ApiResult<Response> {
    Ok(Json(value).into_response())
}

#[derive(Deserialize)]
struct FormatQuery {
    #[serde(default)]
    format: Option<String>,
}

impl FormatQuery {
    fn is_text(&self) -> bool {
        self.format.as_deref() == Some("text")
    }
}

fn text(body: String) -> Response {
    ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], body).into_response()
}

async fn create_submission(State(svc): State<Shared>, Json(req): Json<NewSubmission>) -> ApiResult<Response> {
    let s = svc.ingest_submission(req)?;
    Ok((StatusCode::CREATED, Json(s)).into_response())
}

async fn list_submissions(State(svc): State<Shared>) -> ApiResult<Response> {
    ok(svc.submission_ids()?)
}

async fn get_submission(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    ok(svc.submission(&id)?)
}

async fn events(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    ok(svc.events(&id)?)
}

async fn checklist(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let c = svc.checklist(&id)?;
    if q.is_text() {
        return Ok(text(c.to_text()));
    }
    ok(c)
}

async fn initial_checks(State(svc): State<Shared>) -> ApiResult<Response> {
    ok(svc.initial_checks())
}

async fn triage(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<TriageRequest>,
) -> ApiResult<Response> {
    ok(svc.run_triage(&id, req)?)
}

#[derive(Deserialize)]
struct ReviewersRequest {
    reviewer_ids: Vec<String>,
}

async fn reviewers(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<ReviewersRequest>,
) -> ApiResult<Response> {
    let slots = svc.open_reviews(&id, &req.reviewer_ids)?;
    Ok((StatusCode::CREATED, Json(slots)).into_response())
}

async fn agreement(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    ok(svc.agreement(&id)?)
}

async fn decision(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    ok(svc.finalize_decision(&id)?)
}

#[derive(Deserialize)]
struct RevisionRequest {
    checker_id: String,
    #[serde(default)]
    marks: BTreeMap<String, bool>,
}

async fn revision_check(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<RevisionRequest>,
) -> ApiResult<Response> {
    ok(svc.verify_revision_completion(&id, &req.checker_id, &req.marks)?)
}

async fn letter(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let l = svc.letter(&id)?;
    if q.is_text() {
        return Ok(text(l.to_text()));
    }
    ok(l)
}

async fn form(State(svc): State<Shared>, Path(id): Path<String>, Query(q): Query<FormatQuery>) -> ApiResult<Response> {
    let f = svc.form_view(&id)?;
    if q.is_text() {
        return Ok(text(f.form.to_text()));
    }
    ok(f)
}

async fn session(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    ok(svc.session(&id)?)
}

async fn session_log(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(text(svc.session_log(&id)?.to_jsonl()))
}

fn root() -> String {
    ROOT_NODE.to_string()
}

#[derive(Deserialize)]
struct AnswerRequest {
    item_key: String,
    #[serde(default = "root")]
    node_id: String,
    answer: Answer,
}

async fn answer(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<AnswerRequest>,
) -> ApiResult<Response> {
    let action = SessionAction::Answer {
        item_key: req.item_key,
        node_id: req.node_id,
        answer: req.answer,
    };
    ok(svc.session_action(&id, action)?)
}

#[derive(Deserialize)]
struct MarkRequest {
    item_key: String,
    present: bool,
}

async fn mark(State(svc): State<Shared>, Path(id): Path<String>, Json(req): Json<MarkRequest>) -> ApiResult<Response> {
    let action = SessionAction::Mark {
        item_key: req.item_key,
        present: req.present,
    };
    ok(svc.session_action(&id, action)?)
}

#[derive(Deserialize)]
struct CommentRequest {
    text: String,
}

async fn comment(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<CommentRequest>,
) -> ApiResult<Response> {
    ok(svc.session_action(&id, SessionAction::Comment { text: req.text })?)
}

async fn complete(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    ok(svc.session_action(&id, SessionAction::Complete)?)
}

async fn reopen(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    ok(svc.session_action(&id, SessionAction::Reopen)?)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(service: Shared, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service)).await
}

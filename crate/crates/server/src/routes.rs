use std::collections::HashMap;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Form, Json, Router};
use chrono::{Local, NaiveDate};
use mobility_core::model::parse_segments;
use mobility_core::notify::{NotifyError, PushTarget};
use mobility_core::query::{build_map_payload, export_csv, OutputFormat, QueryForm};
use mobility_core::store::{UserProfile, DATE_FORMAT};
use serde::Deserialize;

use crate::envelope::ApiResponse;
use crate::state::{AppState, SharedState};

type Fields = HashMap<String, String>;

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/certs/public.der", get(public_der))
        .route("/register", post(register))
        .route("/create_regid.php", post(register))
        .route("/segments", post(upload_segments))
        .route("/insert.php", post(upload_segments))
        .route("/query", get(query))
        .route("/getLocations.php", get(query).post(query_post))
        .route("/activities", get(activities))
        .route("/traffic", get(traffic))
        .route("/gcm/register", post(issue_regid))
        .route("/admin/push", post(push))
        .route("/admin/stats", get(stats))
        .route("/inbox/{regid}", get(inbox))
        .with_state(state)
}

/// Non-empty, trimmed form field.
fn field<'a>(fields: &'a Fields, name: &str) -> Option<&'a str> {
    fields.get(name).map(|s| s.trim()).filter(|s| !s.is_empty())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Option<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(v) => Some(v),
        Err(e) => {
            tracing::error!("worker task failed: {e}");
            None
        }
    }
}

async fn public_der(State(state): State<SharedState>) -> Response {
    match state.key() {
        Some(key) => (
            [(header::CONTENT_TYPE, "application/octet-stream")],
            key.public_der().to_vec(),
        )
            .into_response(),
        None => ApiResponse::oops().with_status(StatusCode::SERVICE_UNAVAILABLE),
    }
}

const PROFILE_FIELDS: [&str; 6] = ["nombre_enc", "apellido_enc", "peso_enc", "nacimiento_enc", "genero_enc", "mail_enc"];

fn decrypt_profile(state: &AppState, key: &mobility_core::crypto::KeyPairHandle, fields: &Fields) -> Result<UserProfile, String> {
    let mut plain: HashMap<&str, String> = HashMap::new();
    for name in PROFILE_FIELDS {
        if let Some(hex) = field(fields, name) {
            plain.insert(name, state.decrypt_text(key, hex).map_err(|e| format!("{name}: {e}"))?);
        }
    }
    let peso = match plain.remove("peso_enc") {
        Some(p) => Some(p.trim().parse::<f64>().map_err(|_| "peso: not a number".to_string())?),
        None => None,
    };
    let nacimiento = match plain.remove("nacimiento_enc") {
        Some(d) => Some(NaiveDate::parse_from_str(d.trim(), DATE_FORMAT).map_err(|_| "nacimiento: not a date".to_string())?),
        None => None,
    };
    Ok(UserProfile {
        nombre: plain.remove("nombre_enc"),
        apellido: plain.remove("apellido_enc"),
        peso,
        nacimiento,
        genero: plain.remove("genero_enc"),
        mail: plain.remove("mail_enc"),
    })
}

fn do_register(state: &AppState, fields: &Fields) -> Result<i64, String> {
    let key = state.key().ok_or("no key loaded")?;
    let hash_hex = field(fields, "usu_hash_enc").ok_or("missing usu_hash_enc")?;
    let regid_hex = field(fields, "reg_id_enc").ok_or("missing reg_id_enc")?;
    let usu_hash = state.decrypt_text(&key, hash_hex).map_err(|e| format!("usu_hash_enc: {e}"))?;
    let regid = state.decrypt_text(&key, regid_hex).map_err(|e| format!("reg_id_enc: {e}"))?;
    let profile = decrypt_profile(state, &key, fields)?;
    let app_version = match field(fields, "app_version") {
        Some(v) => v.parse::<u32>().map_err(|_| "app_version: not a number".to_string())?,
        None => 0,
    };
    let user = state.store.upsert_user(&usu_hash, &regid, &profile).map_err(|e| e.to_string())?;
    if !regid.is_empty() {
        state.broker.register_device(&regid, &usu_hash, app_version).map_err(|e| e.to_string())?;
    }
    Ok(user.usu_id)
}

async fn register(State(state): State<SharedState>, Form(fields): Form<Fields>) -> ApiResponse {
    state.stats.count_request();
    if field(&fields, "usu_hash_enc").is_none() || field(&fields, "reg_id_enc").is_none() {
        return ApiResponse::missing();
    }
    let result = blocking({
        let state = state.clone();
        move || do_register(&state, &fields)
    })
    .await;
    match result {
        Some(Ok(usu_id)) => {
            tracing::info!(usu_id, "user registered");
            ApiResponse::inserted()
        }
        Some(Err(e)) => {
            tracing::warn!("registration failed: {e}");
            ApiResponse::oops()
        }
        None => ApiResponse::oops(),
    }
}

enum UploadError {
    Missing(String),
    Failed(String),
}

fn do_upload(state: &AppState, fields: &Fields) -> Result<Vec<(i64, usize)>, UploadError> {
    let hash_hex = field(fields, "usu_hash_enc").ok_or_else(|| UploadError::Missing("usu_hash_enc".into()))?;
    let payload = field(fields, "segment")
        .or_else(|| field(fields, "payload"))
        .ok_or_else(|| UploadError::Missing("segment".into()))?;
    let date = match field(fields, "date") {
        Some(d) => NaiveDate::parse_from_str(d, DATE_FORMAT).map_err(|_| UploadError::Missing(format!("bad date `{d}`")))?,
        None => Local::now().date_naive(),
    };
    let segments = parse_segments(payload).map_err(|e| UploadError::Missing(format!("payload: {e}")))?;
    let key = state.key().ok_or_else(|| UploadError::Failed("no key loaded".into()))?;
    let usu_hash = state
        .decrypt_text(&key, hash_hex)
        .map_err(|e| UploadError::Failed(format!("usu_hash_enc: {e}")))?;
    let mut stored = Vec::with_capacity(segments.len());
    for parsed in &segments {
        let (seg, n) = state
            .store
            .store_segment(&usu_hash, &parsed.segment, date)
            .map_err(|e| UploadError::Failed(e.to_string()))?;
        stored.push((seg.seg_id, n));
    }
    Ok(stored)
}

async fn upload_segments(State(state): State<SharedState>, Form(fields): Form<Fields>) -> ApiResponse {
    state.stats.count_request();
    let result = blocking({
        let state = state.clone();
        move || do_upload(&state, &fields)
    })
    .await;
    match result {
        Some(Ok(stored)) => {
            for (seg_id, locations) in stored {
                tracing::info!(seg_id, locations, "segment stored");
            }
            ApiResponse::inserted()
        }
        Some(Err(UploadError::Missing(e))) => {
            tracing::warn!("upload rejected: {e}");
            ApiResponse::missing()
        }
        Some(Err(UploadError::Failed(e))) => {
            tracing::warn!("upload failed: {e}");
            ApiResponse::oops()
        }
        None => ApiResponse::oops(),
    }
}

fn form_from_fields(fields: &Fields) -> QueryForm {
    let pick = |names: &[&str]| names.iter().find_map(|n| fields.get(*n).cloned());
    QueryForm {
        age_min: pick(&["age_min", "edad"]),
        age_max: pick(&["age_max", "edad2"]),
        activity: pick(&["activity", "actividad"]),
        from: pick(&["from", "dtp_input1"]),
        to: pick(&["to", "dtp_input2"]),
        format: pick(&["format"]).or_else(|| fields.contains_key("submit_csv").then(|| "csv".to_string())),
    }
}

async fn run_query(state: SharedState, fields: Fields) -> Response {
    state.stats.count_request();
    let (q, format) = match form_from_fields(&fields).parse() {
        Ok(v) => v,
        Err(e) => {
            return ApiResponse::failure(e.to_string()).with_status(StatusCode::BAD_REQUEST);
        }
    };
    let today = Local::now().date_naive();
    let rows = match blocking({
        let state = state.clone();
        move || state.store.query_locations(&q, today)
    })
    .await
    {
        Some(Ok(rows)) => rows,
        Some(Err(e)) => {
            tracing::warn!("query failed: {e}");
            let status = match e {
                mobility_core::store::StoreError::InvalidRange => StatusCode::BAD_REQUEST,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            };
            return ApiResponse::failure(e.to_string()).with_status(status);
        }
        None => return ApiResponse::oops().with_status(StatusCode::INTERNAL_SERVER_ERROR),
    };
    match format {
        OutputFormat::Csv => (
            [
                (header::CONTENT_TYPE, "text/csv; charset=utf-8"),
                (header::CONTENT_DISPOSITION, "attachment; filename=\"locations.csv\""),
            ],
            export_csv(&rows),
        )
            .into_response(),
        OutputFormat::Map => match build_map_payload(&rows) {
            Ok(payload) => Json(payload.to_geojson()).into_response(),
            Err(e) => ApiResponse::failure(e.to_string()).with_status(StatusCode::INTERNAL_SERVER_ERROR),
        },
    }
}

async fn query(State(state): State<SharedState>, Query(fields): Query<Fields>) -> Response {
    run_query(state, fields).await
}

async fn query_post(State(state): State<SharedState>, Form(fields): Form<Fields>) -> Response {
    run_query(state, fields).await
}

async fn activities(State(state): State<SharedState>) -> Response {
    match blocking(move || state.store.distinct_activities()).await {
        Some(Ok(names)) => Json(names).into_response(),
        _ => ApiResponse::oops().with_status(StatusCode::INTERNAL_SERVER_ERROR),
    }
}

async fn traffic(State(state): State<SharedState>) -> Json<serde_json::Value> {
    Json(state.traffic().to_geojson())
}

async fn issue_regid(State(state): State<SharedState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "registration_id": state.broker.issue_regid() }))
}

#[derive(Debug, Deserialize)]
struct PushRequest {
    title: String,
    body: String,
    #[serde(default)]
    target: Option<String>,
}

async fn push(State(state): State<SharedState>, Json(req): Json<PushRequest>) -> Json<serde_json::Value> {
    let target = req.target.as_deref().map_or(PushTarget::All, PushTarget::parse);
    let delivered = state.broker.push(&req.title, &req.body, &target);
    tracing::info!(delivered, "push sent");
    Json(serde_json::json!({ "delivered": delivered }))
}

async fn inbox(State(state): State<SharedState>, Path(regid): Path<String>) -> Response {
    match state.broker.poll_inbox(&regid) {
        Ok(msgs) => Json(msgs).into_response(),
        Err(e @ NotifyError::UnknownDevice) | Err(e @ NotifyError::EmptyRegid) => {
            (StatusCode::NOT_FOUND, Json(serde_json::json!({ "error": e.to_string() }))).into_response()
        }
    }
}

async fn stats(State(state): State<SharedState>) -> Json<crate::state::StatsSnapshot> {
    Json(state.stats.snapshot(state.key().map(|k| k.bits())))
}

//! HTTP JSON API over a scenario store.
//!
//! Instances and scenarios live in a [`ScenarioStore`]; solves run as jobs
//! on a bounded worker pool and are polled through `GET /api/jobs/{id}`. An
//! infeasible scenario is a finished job whose solution says so, not an
//! HTTP error. There is no authentication.

mod error;
mod jobs;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use ttmpp_core::io::{parse_instance_document, render_instance_document, ScenarioStore};
use ttmpp_core::{apply_scenario, diff_schedules, solve_instance, Instance, Scenario, SolveOptions};

pub use error::{ApiError, ErrorEnvelope};
pub use jobs::{JobResult, JobState, JobTable, SolveJob, SolveRequest};

/// Upper bound on concurrently running solves.
pub const MAX_WORKERS: usize = 4;

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).min(MAX_WORKERS)
}

struct Inner {
    store: ScenarioStore,
    jobs: JobTable,
    workers: Semaphore,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(store: ScenarioStore, workers: usize) -> Self {
        Self(Arc::new(Inner {
            store,
            jobs: JobTable::default(),
            workers: Semaphore::new(workers.max(1)),
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub course: String,
    pub faculty: String,
    pub slot: String,
}

/// The obsolete schedule in a shape suited to a faculty-by-slot grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleView {
    pub instance: String,
    pub courses: Vec<Entity>,
    pub faculty: Vec<Entity>,
    pub slots: Vec<Entity>,
    #[serde(rename = "X_triples")]
    pub x_triples: Vec<Assignment>,
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs a blocking store call off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_json(&e))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn list_instances(State(state): State<AppState>) -> ApiResult<Json<Vec<String>>> {
    blocking(move || Ok(Json(state.0.store.list_instances()?))).await
}

async fn post_instance(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Created>)> {
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", e.to_string()))?;
    let doc = parse_instance_document(text).map_err(error::from_document)?;
    let id = blocking(move || Ok(state.0.store.put_instance(&doc)?)).await?;
    Ok((StatusCode::CREATED, Json(Created { id })))
}

async fn get_instance(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let doc = blocking(move || Ok(state.0.store.get_instance(&id)?)).await?;
    Ok((
        [(axum::http::header::CONTENT_TYPE, "application/json")],
        render_instance_document(&doc),
    )
        .into_response())
}

async fn get_schedule(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ScheduleView>> {
    let key = id.clone();
    let inst = blocking(move || Ok(state.0.store.get_instance(&key)?.instance)).await?;
    let entities = |items: Vec<(String, String)>| {
        items
            .into_iter()
            .map(|(id, label)| Entity { id, label })
            .collect::<Vec<_>>()
    };
    Ok(Json(ScheduleView {
        instance: id,
        courses: entities(inst.courses.iter().map(|c| (c.id.clone(), c.label.clone())).collect()),
        faculty: entities(inst.faculty.iter().map(|f| (f.id.clone(), f.label.clone())).collect()),
        slots: entities(inst.slots.iter().map(|s| (s.id.clone(), s.label.clone())).collect()),
        x_triples: inst
            .assignments()
            .into_iter()
            .map(|(i, j, t)| Assignment {
                course: inst.courses[i].id.clone(),
                faculty: inst.faculty[j].id.clone(),
                slot: inst.slots[t].id.clone(),
            })
            .collect(),
    }))
}

async fn list_scenarios(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<String>>> {
    blocking(move || {
        state.0.store.get_instance(&id)?;
        Ok(Json(state.0.store.list_scenarios(Some(&id))?))
    })
    .await
}

async fn post_scenario(
    State(state): State<AppState>,
    Path(instance_id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let mut scenario: Scenario = parse_body(&body)?;
    scenario.base_instance = Some(instance_id.clone());
    let id = blocking(move || {
        let base = state.0.store.get_instance(&instance_id)?;
        // Reject scenarios that do not apply cleanly before storing them.
        apply_scenario(&base.instance, &scenario)?;
        Ok(state.0.store.put_scenario(&scenario)?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(Created { id })))
}

async fn get_scenario(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Scenario>> {
    blocking(move || Ok(Json(state.0.store.get_scenario(&id)?))).await
}

async fn delete_scenario(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    blocking(move || {
        state.0.store.delete_scenario(&id)?;
        Ok(StatusCode::NO_CONTENT)
    })
    .await
}

fn run_solve(instance: &Instance, options: &SolveOptions) -> Result<JobResult, String> {
    let solution = solve_instance(instance, options).map_err(|e| e.to_string())?;
    let report = match solution.incumbent {
        Some(_) => Some(diff_schedules(instance, &solution).map_err(|e| e.to_string())?),
        None => None,
    };
    Ok(JobResult { solution, report })
}

async fn post_solve(
    State(state): State<AppState>,
    Path(scenario_id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<SolveJob>)> {
    let request: SolveRequest = if body.iter().all(u8::is_ascii_whitespace) {
        SolveRequest::default()
    } else {
        parse_body(&body)?
    };
    let options = request
        .options()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "validation", e.to_string()))?;

    let store_state = state.clone();
    let key = scenario_id.clone();
    let instance = blocking(move || {
        let store = &store_state.0.store;
        let scenario = store.get_scenario(&key)?;
        let base_id = scenario.base_instance.clone().unwrap_or_default();
        let base = store.get_instance(&base_id)?;
        Ok(apply_scenario(&base.instance, &scenario)?)
    })
    .await?;

    let job = state.0.jobs.create(&scenario_id, request);
    let id = job.id.clone();
    tokio::spawn(async move {
        let Ok(_permit) = state.0.workers.acquire().await else {
            return;
        };
        state.0.jobs.start(&id);
        let outcome = tokio::task::spawn_blocking(move || run_solve(&instance, &options))
            .await
            .unwrap_or_else(|e| Err(format!("solve task failed: {e}")));
        state.0.jobs.finish(&id, outcome);
    });
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SolveJob>> {
    state.0.jobs.get(&id).map(Json).ok_or_else(|| ApiError::not_found("job", &id))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/instances", get(list_instances).post(post_instance))
        .route("/api/instances/{id}", get(get_instance))
        .route("/api/instances/{id}/schedule", get(get_schedule))
        .route("/api/instances/{id}/scenarios", get(list_scenarios).post(post_scenario))
        .route("/api/scenarios/{id}", get(get_scenario).delete(delete_scenario))
        .route("/api/scenarios/{id}/solve", post(post_solve))
        .route("/api/jobs/{id}", get(get_job))
        .fallback(fallback)
        .with_state(state)
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(store: ScenarioStore, addr: SocketAddr, workers: usize) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(store, workers))).await
}

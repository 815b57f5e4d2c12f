//! HTTP+JSON front end.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use log::{error, info};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::events::CampaignDefinition;
use crate::service::CampaignService;

const BODY_LIMIT: usize = 256 * 1024 * 1024;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = ErrorBody { code: self.code().to_string(), message: self.to_string() };
        (self.status(), Json(body)).into_response()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DispatchRequest {
    user_id: String,
    #[serde(default)]
    message: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationRequest {
    user_id: String,
    observed_at: i64,
}

#[derive(Debug, Serialize)]
struct Accepted {
    accepted: usize,
}

type Shared = Arc<CampaignService>;

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

/// Runs blocking service work (file syncs) off the async workers.
async fn blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.expect("service task panicked")
}

async fn publish_model(State(s): State<Shared>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let summary = blocking(move || s.publish_model(&body)).await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn create_campaign(State(s): State<Shared>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let definition: CampaignDefinition = parse(&body)?;
    let info = blocking(move || s.create_campaign(definition)).await?;
    Ok((StatusCode::CREATED, Json(info)))
}

async fn list_campaigns(State(s): State<Shared>) -> Result<impl IntoResponse, ServiceError> {
    let infos = s.campaign_ids().iter().map(|id| s.info(id)).collect::<Result<Vec<_>, _>>()?;
    Ok(Json(infos))
}

async fn campaign_info(State(s): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(s.info(&id)?))
}

async fn ingest(State(s): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let records = propagate_core::corpus::parse_users(&body[..]).map_err(|e| ServiceError::Core(e.into()))?;
    let accepted = blocking(move || s.ingest(&id, records)).await?;
    Ok(Json(Accepted { accepted }))
}

async fn recommendations(State(s): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(s.recommendations(&id)?))
}

async fn dispatch(State(s): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: DispatchRequest = parse(&body)?;
    let event = blocking(move || s.dispatch(&id, &req.user_id, req.message.as_deref())).await?;
    Ok((StatusCode::CREATED, Json(event)))
}

async fn observe(State(s): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: ObservationRequest = parse(&body)?;
    let event = blocking(move || s.observe(&id, &req.user_id, req.observed_at)).await?;
    Ok((StatusCode::CREATED, Json(event)))
}

async fn close(State(s): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    let event = blocking(move || s.close(&id)).await?;
    Ok(Json(event))
}

async fn metrics(State(s): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(s.metrics(&id)?))
}

async fn events(State(s): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    let events = blocking(move || s.events(&id)).await?;
    Ok(Json(events))
}

async fn fallback() -> ServiceError {
    ServiceError::BadRequest("no such route".into())
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/models", post(publish_model))
        .route("/campaigns", post(create_campaign).get(list_campaigns))
        .route("/campaigns/{id}", get(campaign_info))
        .route("/campaigns/{id}/candidates", post(ingest))
        .route("/campaigns/{id}/recommendations", get(recommendations))
        .route("/campaigns/{id}/dispatch", post(dispatch))
        .route("/campaigns/{id}/observations", post(observe))
        .route("/campaigns/{id}/close", post(close))
        .route("/campaigns/{id}/metrics", get(metrics))
        .route("/campaigns/{id}/events", get(events))
        .fallback(fallback)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(service)
}

/// Logs scheduled retweets once they fall due.
pub fn spawn_flusher(service: Shared, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            let s = service.clone();
            match blocking(move || s.flush_due()).await {
                Ok(0) => {}
                Ok(n) => info!("logged {n} scheduled retweets"),
                Err(e) => error!("flushing scheduled retweets: {e}"),
            }
        }
    })
}

/// Serves the API on `addr` until the process stops.
pub async fn serve(service: Shared, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!("listening on {}", listener.local_addr()?);
    spawn_flusher(service.clone(), Duration::from_secs(1));
    axum::serve(listener, router(service)).await
}

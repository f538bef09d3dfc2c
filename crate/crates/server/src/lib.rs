//! HTTP API over a mined catalog.
//!
//! All routes live under `/api`. Responses are JSON except slices, MIPs and
//! exported probability volumes, which are raw little-endian `f32` with the
//! grid shape in `x-bivox-*` headers. Group edits are kept per session; pass
//! the token returned by `POST /api/session` in the `x-bivox-session` header.

pub mod state;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bivox::analysis::hierarchy::VarsetQuery;
use bivox::analysis::{Axis, Grid2};
use bivox::miner::VarId;
use bivox::Error;
use serde::{Deserialize, Serialize};

pub use state::{AppState, Drilldown, Projection, SelectionRef, Session};

pub const SESSION_HEADER: &str = "x-bivox-session";

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NotFound { .. } => StatusCode::NOT_FOUND,
            Error::Invalid(_) | Error::Params(_) | Error::SingletonSplit(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;
type Shared = Arc<AppState>;
type Params = Query<HashMap<String, String>>;

/// Serializes with serde_json so identical values give identical bytes.
pub fn json_body<T: Serialize>(value: &T) -> Response {
    let bytes = serde_json::to_vec(value).expect("response serializes");
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

/// Little-endian f32 payload.
pub fn f32_bytes(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn grid_body(grid: &Grid2) -> Response {
    let mut resp = Response::new(Body::from(f32_bytes(&grid.values)));
    let h = resp.headers_mut();
    h.insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static("application/octet-stream"),
    );
    h.insert("x-bivox-width", grid.width.into());
    h.insert("x-bivox-height", grid.height.into());
    resp
}

fn session_of(headers: &HeaderMap) -> Option<String> {
    headers
        .get(SESSION_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::to_owned)
}

fn require_session(headers: &HeaderMap) -> Result<String, ApiError> {
    session_of(headers).ok_or_else(|| ApiError::bad_request(format!("group edits need the {SESSION_HEADER} header")))
}

fn param<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str) -> Result<Option<T>, ApiError> {
    q.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| ApiError::bad_request(format!("bad value '{v}' for {key}")))
        })
        .transpose()
}

fn required<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str) -> Result<T, ApiError> {
    param(q, key)?.ok_or_else(|| ApiError::bad_request(format!("missing query parameter {key}")))
}

/// Parses `/api/varsets` query parameters.
pub fn varset_query(q: &HashMap<String, String>) -> Result<VarsetQuery, ApiError> {
    Ok(VarsetQuery {
        min_card: param(q, "min_card")?,
        max_card: param(q, "max_card")?,
        start: param(q, "start")?,
        sort: q.get("sort").map(|s| s.parse()).transpose()?,
        order: q.get("order").map(|s| s.parse()).transpose()?.unwrap_or_default(),
    })
}

/// Runs analysis work off the async executor.
async fn blocking<T: Send + 'static>(
    state: Shared,
    f: impl FnOnce(&AppState) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

async fn health() -> Response {
    json_body(&serde_json::json!({ "status": "ok" }))
}

async fn dataset(State(s): State<Shared>) -> Response {
    json_body(&s.summary)
}

async fn variable_stats(State(s): State<Shared>) -> Response {
    json_body(&s.stats)
}

async fn variable_mi(State(s): State<Shared>, Path(id): Path<VarId>) -> ApiResult {
    let d = blocking(s, move |s| Ok(s.drilldown(id)?)).await?;
    Ok(json_body(&d))
}

async fn varsets(State(s): State<Shared>, Query(q): Params) -> ApiResult {
    Ok(json_body(&s.varsets(&varset_query(&q)?)))
}

async fn varset(State(s): State<Shared>, Path(id): Path<usize>) -> ApiResult {
    Ok(json_body(s.record(id)?))
}

async fn projection(State(s): State<Shared>, Path(id): Path<usize>, headers: HeaderMap) -> ApiResult {
    let session = session_of(&headers);
    let p = blocking(s, move |s| Ok(s.projection(id, session.as_deref())?)).await?;
    Ok(json_body(&p))
}

async fn groups(State(s): State<Shared>, Path(id): Path<usize>, headers: HeaderMap) -> ApiResult {
    let session = session_of(&headers);
    let g = blocking(s, move |s| Ok(s.groups(id, session.as_deref())?)).await?;
    Ok(json_body(&g))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MergeRequest {
    pub groups: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SplitRequest {
    pub group: usize,
}

async fn merge(
    State(s): State<Shared>,
    Path(id): Path<usize>,
    headers: HeaderMap,
    Json(req): Json<MergeRequest>,
) -> ApiResult {
    let session = require_session(&headers)?;
    let g = blocking(s, move |s| Ok(s.merge(id, &session, &req.groups)?)).await?;
    Ok(json_body(&g))
}

async fn split(
    State(s): State<Shared>,
    Path(id): Path<usize>,
    headers: HeaderMap,
    Json(req): Json<SplitRequest>,
) -> ApiResult {
    let session = require_session(&headers)?;
    let g = blocking(s, move |s| Ok(s.split(id, &session, req.group)?)).await?;
    Ok(json_body(&g))
}

async fn reset(State(s): State<Shared>, Path(id): Path<usize>, headers: HeaderMap) -> ApiResult {
    let session = require_session(&headers)?;
    let g = blocking(s, move |s| Ok(s.reset(id, &session)?)).await?;
    Ok(json_body(&g))
}

async fn create_session(State(s): State<Shared>) -> Response {
    let session = s.create_session();
    json_body(&serde_json::json!({ "session": session.id, "created": session.created }))
}

#[derive(Clone, Copy)]
enum Kind {
    Group,
    Bicluster,
}

fn selection_ref(kind: Kind, id: &str) -> Result<SelectionRef, ApiError> {
    Ok(match kind {
        Kind::Group => state::parse_group_id(id)?,
        Kind::Bicluster => SelectionRef::Bicluster(
            id.parse()
                .map_err(|_| ApiError::bad_request(format!("bad bicluster id '{id}'")))?,
        ),
    })
}

async fn pcdata_for(kind: Kind, s: Shared, id: String, headers: HeaderMap, q: HashMap<String, String>) -> ApiResult {
    let sel = selection_ref(kind, &id)?;
    let bins: Option<usize> = param(&q, "bins")?;
    let session = session_of(&headers);
    let pc = blocking(s, move |s| Ok(s.pcdata(sel, session.as_deref(), bins)?)).await?;
    Ok(json_body(&pc))
}

async fn slice_for(kind: Kind, s: Shared, id: String, headers: HeaderMap, q: HashMap<String, String>) -> ApiResult {
    let sel = selection_ref(kind, &id)?;
    let axis: Axis = required(&q, "axis")?;
    let index: usize = required(&q, "index")?;
    let session = session_of(&headers);
    let grid = blocking(s, move |s| Ok(s.slice(sel, session.as_deref(), axis, index)?)).await?;
    Ok(grid_body(&grid))
}

async fn mip_for(kind: Kind, s: Shared, id: String, headers: HeaderMap, q: HashMap<String, String>) -> ApiResult {
    let sel = selection_ref(kind, &id)?;
    let axis: Axis = required(&q, "axis")?;
    let session = session_of(&headers);
    let grid = blocking(s, move |s| Ok(s.mip(sel, session.as_deref(), axis)?)).await?;
    Ok(grid_body(&grid))
}

macro_rules! view_route {
    ($name:ident, $kind:expr, $inner:ident) => {
        async fn $name(
            State(s): State<Shared>,
            Path(id): Path<String>,
            headers: HeaderMap,
            Query(q): Params,
        ) -> ApiResult {
            $inner($kind, s, id, headers, q).await
        }
    };
}

view_route!(group_pcdata, Kind::Group, pcdata_for);
view_route!(bicluster_pcdata, Kind::Bicluster, pcdata_for);
view_route!(group_slice, Kind::Group, slice_for);
view_route!(bicluster_slice, Kind::Bicluster, slice_for);
view_route!(group_mip, Kind::Group, mip_for);
view_route!(bicluster_mip, Kind::Bicluster, mip_for);

/// `kind=catalog`, or `kind=probability_volume|pcdata` with
/// `selection=bicluster:ID|group:VARSET-GROUP`.
async fn export(State(s): State<Shared>, headers: HeaderMap, Query(q): Params) -> ApiResult {
    let kind: String = required(&q, "kind")?;
    let session = session_of(&headers);
    let attach = |mut resp: Response, name: &str| {
        if let Ok(v) = HeaderValue::from_str(&format!("attachment; filename=\"{name}\"")) {
            resp.headers_mut().insert(header::CONTENT_DISPOSITION, v);
        }
        resp
    };
    match kind.as_str() {
        "catalog" => {
            let body = s.catalog.to_json();
            Ok(attach(
                ([(header::CONTENT_TYPE, "application/json")], body).into_response(),
                "catalog.json",
            ))
        }
        "probability_volume" => {
            let sel: SelectionRef = required(&q, "selection")?;
            let vol = blocking(s, move |s| Ok(s.volume(sel, session.as_deref())?)).await?;
            let mut resp = Response::new(Body::from(f32_bytes(&vol.values)));
            let h = resp.headers_mut();
            h.insert(
                header::CONTENT_TYPE,
                HeaderValue::from_static("application/octet-stream"),
            );
            let d = vol.dims;
            h.insert(
                "x-bivox-dims",
                HeaderValue::from_str(&format!("{},{},{}", d.nx, d.ny, d.nz)).expect("ascii"),
            );
            Ok(attach(resp, "probability.raw"))
        }
        "pcdata" => {
            let sel: SelectionRef = required(&q, "selection")?;
            let bins: Option<usize> = param(&q, "bins")?;
            let pc = blocking(s, move |s| Ok(s.pcdata(sel, session.as_deref(), bins)?)).await?;
            Ok(attach(json_body(&pc), "pcdata.json"))
        }
        other => Err(ApiError::bad_request(format!("unknown export kind '{other}'"))),
    }
}

async fn auth(State(s): State<Shared>, req: Request, next: Next) -> Response {
    if let Some(token) = &s.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::new(StatusCode::UNAUTHORIZED, "missing or wrong bearer token").into_response();
        }
    }
    next.run(req).await
}

pub fn router(state: Shared) -> Router {
    let api = Router::new()
        .route("/dataset", get(dataset))
        .route("/variables/stats", get(variable_stats))
        .route("/variables/{id}/mi", get(variable_mi))
        .route("/varsets", get(varsets))
        .route("/varsets/{id}", get(varset))
        .route("/varsets/{id}/projection", get(projection))
        .route("/varsets/{id}/groups", get(groups))
        .route("/varsets/{id}/groups/merge", post(merge))
        .route("/varsets/{id}/groups/split", post(split))
        .route("/varsets/{id}/groups/reset", post(reset))
        .route("/groups/{id}/pcdata", get(group_pcdata))
        .route("/groups/{id}/slice", get(group_slice))
        .route("/groups/{id}/mip", get(group_mip))
        .route("/biclusters/{id}/pcdata", get(bicluster_pcdata))
        .route("/biclusters/{id}/slice", get(bicluster_slice))
        .route("/biclusters/{id}/mip", get(bicluster_mip))
        .route("/export", get(export))
        .route("/session", post(create_session))
        .route_layer(middleware::from_fn_with_state(state.clone(), auth))
        .route("/health", get(health));
    Router::new().nest("/api", api).with_state(state)
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

//! `/api/v1` routes.

use std::collections::HashMap;
use std::fmt::Display;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::NaiveDate;
use infoveil_core::analytics::{DEFAULT_N_TOP, DEFAULT_THRESHOLD};
use infoveil_core::leadlag::{LagObjective, PolicyEvent};
use infoveil_core::report::{self, ChangeParams, LagSpec, LeadLagParams, ReportError, DEFAULT_CAP, DEFAULT_K};
use infoveil_core::{geo, Catalog, DateWindow, Granularity, Snapshot, SnapshotStore};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::alerts::{alert_report, AlertReport};
use crate::watchlist::{Watchlist, WatchlistEntry, WatchlistError, WatchlistStore};

pub const DEFAULT_LEAD_THRESHOLD: u8 = 50;

/// Shared state: the snapshot store, the currently loaded snapshot and the
/// watchlist.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    store: SnapshotStore,
    catalog: Catalog,
    events: Vec<PolicyEvent>,
    watchlist: WatchlistStore,
    loaded: RwLock<Option<Arc<Snapshot>>>,
}

impl AppState {
    pub fn new(store: SnapshotStore, catalog: Catalog, events: Vec<PolicyEvent>, watchlist: WatchlistStore) -> Self {
        Self {
            inner: Arc::new(Inner {
                store,
                catalog,
                events,
                watchlist,
                loaded: RwLock::new(None),
            }),
        }
    }

    pub fn store(&self) -> &SnapshotStore {
        &self.inner.store
    }

    pub fn catalog(&self) -> &Catalog {
        &self.inner.catalog
    }

    /// The committed snapshot, reloaded when `HEAD` has moved.
    pub fn snapshot(&self) -> Result<Arc<Snapshot>, ApiError> {
        let head = self
            .inner
            .store
            .head()
            .map_err(|e| ApiError::unavailable(e.to_string()))?
            .ok_or_else(|| ApiError::unavailable("the store has no committed snapshot"))?;
        if let Some(s) = self.inner.loaded.read().unwrap_or_else(|e| e.into_inner()).as_ref() {
            if s.content_hash() == head {
                return Ok(s.clone());
            }
        }
        let fresh = Arc::new(
            self.inner
                .store
                .load(&head)
                .map_err(|e| ApiError::unavailable(e.to_string()))?,
        );
        tracing::info!(snapshot = %head, "serving snapshot");
        *self.inner.loaded.write().unwrap_or_else(|e| e.into_inner()) = Some(fresh.clone());
        Ok(fresh)
    }
}

/// Every successful read is wrapped with the hash it was computed from.
#[derive(Debug, Serialize)]
pub struct Envelope<T> {
    pub snapshot: String,
    pub data: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub detail: Value,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>, detail: Value) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                detail,
            },
        }
    }

    fn bad_param(name: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_parameter", message, json!({ "parameter": name }))
    }

    fn unavailable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "store_unavailable", message, Value::Null)
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        let status = if e.is_not_found() {
            StatusCode::NOT_FOUND
        } else {
            match e {
                ReportError::InvalidParameter(_) => StatusCode::BAD_REQUEST,
                _ => StatusCode::UNPROCESSABLE_ENTITY,
            }
        };
        let detail = match &e {
            ReportError::UnknownQuery(id) => json!({ "query_id": id }),
            ReportError::UnknownIndicator(name) => json!({ "indicator": name }),
            ReportError::UnknownGeography(g) => json!({ "geo": g }),
            ReportError::SeriesNotFound { query_id, geo } => json!({ "query_id": query_id, "geo": geo }),
            ReportError::WindowUnavailable { requested, available } => {
                json!({ "requested": requested, "available": available })
            }
            _ => Value::Null,
        };
        Self::new(status, e.code(), e.to_string(), detail)
    }
}

impl From<WatchlistError> for ApiError {
    fn from(e: WatchlistError) -> Self {
        match &e {
            WatchlistError::VersionConflict { expected, current } => Self::new(
                StatusCode::CONFLICT,
                "version_conflict",
                e.to_string(),
                json!({ "expected": expected, "current": current }),
            ),
            WatchlistError::InvalidEntry { index, .. } => Self::new(
                StatusCode::BAD_REQUEST,
                "invalid_watchlist",
                e.to_string(),
                json!({ "index": index }),
            ),
            WatchlistError::Storage { .. } => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failed", e.to_string(), Value::Null)
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<Envelope<T>>, ApiError>;

fn envelope<T>(snapshot: &Snapshot, data: T) -> ApiResult<T> {
    Ok(Json(Envelope {
        snapshot: snapshot.content_hash().to_string(),
        data,
    }))
}

/// Query parameters as a flat map with typed accessors.
struct Params(HashMap<String, String>);

impl Params {
    fn from(q: Result<Query<HashMap<String, String>>, QueryRejection>) -> Result<Self, ApiError> {
        q.map(|Query(m)| Params(m))
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query_string", e.body_text(), Value::Null))
    }

    fn opt<T: FromStr>(&self, name: &str) -> Result<Option<T>, ApiError>
    where
        T::Err: Display,
    {
        self.0
            .get(name)
            .map(|raw| {
                raw.parse()
                    .map_err(|e| ApiError::bad_param(name, format!("{name}={raw:?}: {e}")))
            })
            .transpose()
    }

    fn req<T: FromStr>(&self, name: &str) -> Result<T, ApiError>
    where
        T::Err: Display,
    {
        self.opt(name)?
            .ok_or_else(|| ApiError::bad_param(name, format!("missing required parameter {name}")))
    }

    /// A window given as separate `from` and `to` dates.
    fn date_window(&self) -> Result<Option<DateWindow>, ApiError> {
        match (self.opt::<NaiveDate>("from")?, self.opt::<NaiveDate>("to")?) {
            (None, None) => Ok(None),
            (Some(from), Some(to)) => DateWindow::new(from, to)
                .map(Some)
                .map_err(|e| ApiError::bad_param("from", e.to_string())),
            _ => Err(ApiError::bad_param("from", "from and to must be given together")),
        }
    }
}

/// Builds the `/api/v1` router over `state`.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/catalog", get(catalog))
        .route("/api/v1/trends", get(trends))
        .route("/api/v1/panel", get(panel))
        .route("/api/v1/change", get(change))
        .route("/api/v1/correlation", get(correlation))
        .route("/api/v1/pca", get(pca))
        .route("/api/v1/pca/{k}/interpret", get(interpret))
        .route("/api/v1/choropleth", get(choropleth))
        .route("/api/v1/leadlag", get(leadlag))
        .route("/api/v1/events/leadtime", get(leadtime))
        .route("/api/v1/watchlist", get(get_watchlist).put(put_watchlist))
        .route("/api/v1/alerts", get(alerts))
        .fallback(not_found)
        .with_state(state)
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no_such_endpoint", "no such endpoint", Value::Null)
}

type RawQuery = Result<Query<HashMap<String, String>>, QueryRejection>;

async fn catalog(State(st): State<AppState>) -> ApiResult<report::CatalogReport> {
    let s = st.snapshot()?;
    envelope(&s, report::catalog_report(st.catalog()))
}

async fn trends(State(st): State<AppState>, q: RawQuery) -> ApiResult<report::TrendsReport> {
    let p = Params::from(q)?;
    let s = st.snapshot()?;
    let query: String = p.req("query")?;
    let geo = p.opt::<String>("geo")?.unwrap_or_else(|| geo::NATIONAL.to_string());
    let granularity: Option<Granularity> = p.opt("granularity")?;
    envelope(&s, report::trends_report(&s, st.catalog(), &query, &geo, granularity, p.date_window()?)?)
}

async fn panel(State(st): State<AppState>, q: RawQuery) -> ApiResult<report::PanelReport> {
    let p = Params::from(q)?;
    let s = st.snapshot()?;
    envelope(&s, report::panel_report(&s, p.date_window()?)?)
}

/// `cap` is a positive number, or `none` to disable capping.
fn cap_param(p: &Params) -> Result<Option<f64>, ApiError> {
    match p.0.get("cap").map(String::as_str) {
        None => Ok(Some(DEFAULT_CAP)),
        Some("none") => Ok(None),
        Some(_) => p.opt("cap"),
    }
}

async fn change(State(st): State<AppState>, q: RawQuery) -> ApiResult<report::ChangeReport> {
    let p = Params::from(q)?;
    let s = st.snapshot()?;
    let defaults = ChangeParams::default();
    let params = ChangeParams {
        from: p.opt("from_window")?.unwrap_or(defaults.from),
        to: p.opt("to_window")?.unwrap_or(defaults.to),
        cap: cap_param(&p)?,
    };
    let geo = p.opt::<String>("geo")?.unwrap_or_else(|| geo::NATIONAL.to_string());
    envelope(&s, report::change_report(&s, st.catalog(), &geo, &params)?)
}

async fn correlation(State(st): State<AppState>, q: RawQuery) -> ApiResult<report::CorrelationReport> {
    let p = Params::from(q)?;
    let s = st.snapshot()?;
    let drop = p.opt("drop_incomplete")?.unwrap_or(true);
    envelope(&s, report::correlation_report(&s, drop)?)
}

async fn pca(State(st): State<AppState>, q: RawQuery) -> ApiResult<report::PcaReport> {
    let p = Params::from(q)?;
    let s = st.snapshot()?;
    let k = p.opt("k")?.unwrap_or(DEFAULT_K);
    let threshold = p.opt("threshold")?.unwrap_or(DEFAULT_THRESHOLD);
    envelope(&s, report::pca_report(&s, k, threshold)?)
}

async fn interpret(State(st): State<AppState>, Path(k): Path<String>, q: RawQuery) -> ApiResult<report::InterpretReport> {
    let p = Params::from(q)?;
    let s = st.snapshot()?;
    let component: usize = k
        .parse()
        .map_err(|e| ApiError::bad_param("k", format!("component {k:?}: {e}")))?;
    let threshold = p.opt("threshold")?.unwrap_or(DEFAULT_THRESHOLD);
    let n_top = p.opt("n_top")?.unwrap_or(DEFAULT_N_TOP);
    let label = p.opt("label")?;
    envelope(&s, report::interpret_report(&s, component, threshold, n_top, label)?)
}

async fn choropleth(State(st): State<AppState>, q: RawQuery) -> ApiResult<report::ChoroplethReport> {
    let p = Params::from(q)?;
    let s = st.snapshot()?;
    let query: String = p.req("query")?;
    envelope(&s, report::choropleth_report(&s, st.catalog(), &query, p.date_window()?)?)
}

async fn leadlag(State(st): State<AppState>, q: RawQuery) -> ApiResult<report::LeadLagReport> {
    let p = Params::from(q)?;
    let s = st.snapshot()?;
    let lags = match (p.opt("lag")?, p.opt("lag_min")?, p.opt("lag_max")?) {
        (Some(lag), None, None) => LagSpec::Single(lag),
        (None, None, None) => LagSpec::default(),
        (None, Some(lo), Some(hi)) => LagSpec::Range(lo, hi),
        (Some(_), _, _) => return Err(ApiError::bad_param("lag", "give either lag or lag_min and lag_max")),
        _ => return Err(ApiError::bad_param("lag_min", "lag_min and lag_max must be given together")),
    };
    let params = LeadLagParams {
        query_id: p.req("query")?,
        indicator: p.req("indicator")?,
        lags,
        objective: p.opt::<LagObjective>("objective")?.unwrap_or_default(),
        baseline: p.opt("baseline")?,
    };
    envelope(&s, report::leadlag_report(&s, st.catalog(), &params)?)
}

async fn leadtime(State(st): State<AppState>, q: RawQuery) -> ApiResult<report::LeadTimeReport> {
    let p = Params::from(q)?;
    let s = st.snapshot()?;
    let query: String = p.req("query")?;
    let threshold = p.opt("threshold")?.unwrap_or(DEFAULT_LEAD_THRESHOLD);
    if threshold > 100 {
        return Err(ApiError::bad_param("threshold", "RSV thresholds lie in 0..=100"));
    }
    envelope(&s, report::leadtime_report(&s, st.catalog(), &query, threshold, &st.inner.events)?)
}

async fn get_watchlist(State(st): State<AppState>) -> Json<Watchlist> {
    Json(st.inner.watchlist.get())
}

/// Body of a watchlist update: the version it was based on plus the new
/// entries.
#[derive(Debug, Deserialize)]
struct WatchlistUpdate {
    version: u64,
    entries: Vec<WatchlistEntry>,
}

async fn put_watchlist(
    State(st): State<AppState>,
    body: Result<Json<WatchlistUpdate>, JsonRejection>,
) -> Result<Json<Watchlist>, ApiError> {
    let Json(update) =
        body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.body_text(), Value::Null))?;
    Ok(Json(st.inner.watchlist.replace(update.version, update.entries, st.catalog())?))
}

async fn alerts(State(st): State<AppState>) -> ApiResult<AlertReport> {
    let s = st.snapshot()?;
    envelope(&s, alert_report(&s, &st.inner.watchlist.get()))
}

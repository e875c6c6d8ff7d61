//! In-process server speaking the wire contract, backed by snapshot data.
//!
//! Responses can be scripted (status codes, truncated or arbitrary bodies)
//! and every request is logged with its arrival time so tests can check
//! retry and rate-limit behaviour from the server side.

use std::collections::{HashMap, VecDeque};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::{Query, State};
use axum::http::{StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::NaiveDate;
use infoveil_core::rsv::quantize_shares;
use infoveil_core::{Catalog, DateWindow, Granularity, RsvPoint, Snapshot};
use serde::Deserialize;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::wire::{ByStateResponse, OverTimeResponse, WireError, WirePoint, WireState, BY_STATE_PATH, OVER_TIME_PATH};

/// One scripted reply, consumed in order before normal service resumes.
#[derive(Debug, Clone, PartialEq)]
pub enum Scripted {
    Status(u16),
    /// 200 with the first half of the normal body.
    Truncated,
    /// 200 with exactly this body.
    Body(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequestRecord {
    pub at: Instant,
    pub path: String,
    pub status: u16,
}

/// Series and state aggregates the mock serves, keyed by canonical query text.
#[derive(Debug, Clone, Default)]
pub struct MockData {
    over_time: HashMap<(String, String, Granularity), Vec<RsvPoint>>,
    by_state: HashMap<String, (DateWindow, Vec<(String, Option<u8>)>)>,
}

impl MockData {
    pub fn from_snapshot(snapshot: &Snapshot, catalog: &Catalog) -> Self {
        let expr_of = |id: &str| catalog.get(id).map(|q| q.expr.canonical_text().to_string());
        let mut data = MockData::default();
        for s in snapshot.all_series() {
            if let Some(expr) = expr_of(&s.query_id) {
                data.over_time
                    .insert((expr, s.geo.clone(), s.granularity), s.points().to_vec());
            }
        }
        let panel = &snapshot.state_window;
        for (j, id) in panel.query_ids().iter().enumerate() {
            if let Some(expr) = expr_of(id) {
                let values = panel
                    .states()
                    .iter()
                    .zip(panel.column(j))
                    .map(|(s, v)| (s.clone(), v.map(|x| x.round() as u8)))
                    .collect();
                data.by_state.insert(expr, (panel.window, values));
            }
        }
        data
    }

    pub fn insert_series(&mut self, expr: &str, geo: &str, granularity: Granularity, points: Vec<RsvPoint>) {
        self.over_time
            .insert((expr.to_string(), geo.to_string(), granularity), points);
    }

    pub fn insert_states(&mut self, expr: &str, window: DateWindow, values: Vec<(String, Option<u8>)>) {
        self.by_state.insert(expr.to_string(), (window, values));
    }
}

struct Shared {
    data: MockData,
    script: Mutex<VecDeque<Scripted>>,
    log: Mutex<Vec<RequestRecord>>,
}

pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
}

#[derive(Debug, Deserialize)]
struct OverTimeParams {
    q: String,
    geo: String,
    from: NaiveDate,
    to: NaiveDate,
    gran: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ByStateParams {
    q: String,
    from: NaiveDate,
    to: NaiveDate,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(WireError { error: message.into() })).into_response()
}

impl MockServer {
    /// Binds an ephemeral local port and starts serving.
    pub async fn start(data: MockData) -> std::io::Result<Self> {
        Self::bind(data, SocketAddr::from(([127, 0, 0, 1], 0))).await
    }

    pub async fn bind(data: MockData, addr: SocketAddr) -> std::io::Result<Self> {
        let shared = Arc::new(Shared {
            data,
            script: Mutex::new(VecDeque::new()),
            log: Mutex::new(Vec::new()),
        });
        let app = Router::new()
            .route(OVER_TIME_PATH, get(over_time))
            .route(BY_STATE_PATH, get(by_state))
            .with_state(shared.clone());
        let listener = tokio::net::TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel();
        let task = tokio::spawn(async move {
            let serve = axum::serve(listener, app).with_graceful_shutdown(async {
                let _ = rx.await;
            });
            if let Err(e) = serve.await {
                tracing::error!(error = %e, "mock trends server stopped");
            }
        });
        Ok(Self {
            addr,
            shared,
            shutdown: Some(tx),
            task,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Queues replies served before normal responses resume.
    pub fn script(&self, replies: impl IntoIterator<Item = Scripted>) {
        lock(&self.shared.script).extend(replies);
    }

    /// Every request received so far, in arrival order.
    pub fn requests(&self) -> Vec<RequestRecord> {
        lock(&self.shared.log).clone()
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }

    /// Serves until the process is interrupted.
    pub async fn run_until_ctrl_c(mut self) {
        let _ = tokio::signal::ctrl_c().await;
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Applies the next scripted reply (if any) to a normal response and logs it.
fn finish(shared: &Shared, uri: &Uri, normal: Response) -> Response {
    let at = Instant::now();
    let scripted = lock(&shared.script).pop_front();
    let response = match scripted {
        None => normal,
        Some(Scripted::Status(code)) => {
            let status = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            error(status, "scripted failure")
        }
        Some(Scripted::Body(body)) => (StatusCode::OK, body).into_response(),
        Some(Scripted::Truncated) => {
            let full = serde_json::to_string(&OverTimeResponse { points: sample_points() }).expect("serializes");
            (StatusCode::OK, full[..full.len() / 2].to_string()).into_response()
        }
    };
    lock(&shared.log).push(RequestRecord {
        at,
        path: uri.path().to_string(),
        status: response.status().as_u16(),
    });
    response
}

fn sample_points() -> Vec<WirePoint> {
    (1..=9)
        .map(|d| WirePoint {
            date: format!("2020-03-0{d}"),
            value: i64::from(d) * 10,
        })
        .collect()
}

async fn over_time(
    State(shared): State<Arc<Shared>>,
    uri: Uri,
    params: Result<Query<OverTimeParams>, axum::extract::rejection::QueryRejection>,
) -> Response {
    let normal = match params {
        Err(e) => error(StatusCode::BAD_REQUEST, e.body_text()),
        Ok(Query(p)) => over_time_body(&shared.data, p),
    };
    finish(&shared, &uri, normal)
}

fn over_time_body(data: &MockData, p: OverTimeParams) -> Response {
    let granularity: Granularity = match p.gran.as_deref().unwrap_or("weekly").parse() {
        Ok(g) => g,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let Some(points) = data.over_time.get(&(p.q.clone(), p.geo.clone(), granularity)) else {
        return error(StatusCode::NOT_FOUND, format!("no {granularity} data for {:?} in {}", p.q, p.geo));
    };
    let in_window: Vec<&RsvPoint> = points.iter().filter(|pt| pt.date >= p.from && pt.date <= p.to).collect();
    // values are renormalized over the requested window, as the live source does
    let shares: Vec<f64> = in_window.iter().map(|pt| f64::from(pt.value)).collect();
    let points = in_window
        .iter()
        .zip(quantize_shares(&shares))
        .map(|(pt, v)| WirePoint {
            date: pt.date.to_string(),
            value: i64::from(v),
        })
        .collect();
    Json(OverTimeResponse { points }).into_response()
}

async fn by_state(
    State(shared): State<Arc<Shared>>,
    uri: Uri,
    params: Result<Query<ByStateParams>, axum::extract::rejection::QueryRejection>,
) -> Response {
    let normal = match params {
        Err(e) => error(StatusCode::BAD_REQUEST, e.body_text()),
        Ok(Query(p)) => match shared.data.by_state.get(&p.q) {
            Some((window, values)) if window.from == p.from && window.to == p.to => {
                // absent states are omitted, as the live source does
                let states = values
                    .iter()
                    .filter_map(|(geo, v)| {
                        v.map(|v| WireState {
                            geo: geo.clone(),
                            value: Some(i64::from(v)),
                        })
                    })
                    .collect();
                Json(ByStateResponse { states }).into_response()
            }
            Some((window, _)) => error(StatusCode::NOT_FOUND, format!("state data covers {window} only")),
            None => error(StatusCode::NOT_FOUND, format!("no state data for {:?}", p.q)),
        },
    };
    finish(&shared, &uri, normal)
}

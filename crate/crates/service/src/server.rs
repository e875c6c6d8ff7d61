use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::time::Duration;

use chrono::{Days, NaiveDate, Utc};
use infoveil_core::leadlag::PolicyEvent;
use infoveil_core::{ingest, Catalog, DateWindow, Granularity, Snapshot, SnapshotStore};
use infoveil_trends::{pull_snapshot, ClientConfig, PullPlan, TrendsClient};
use thiserror::Error;
use tokio::sync::watch;
use tokio::task::JoinHandle;

use crate::api::{router, AppState};
use crate::config::ServiceConfig;
use crate::watchlist::WatchlistStore;

/// First week pulled when the store is empty.
const DEFAULT_NATIONAL_START: (i32, u32, u32) = (2016, 1, 3);
/// State aggregate span when the store is empty.
const DEFAULT_STATE_WINDOW_DAYS: u64 = 45;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("store unavailable: {0}")]
    StoreUnavailable(String),
}

/// A running server; dropping it leaves the server running until the
/// runtime stops, [`ServiceHandle::shutdown`] drains it.
pub struct ServiceHandle {
    addr: SocketAddr,
    stop: watch::Sender<bool>,
    server: JoinHandle<()>,
    worker: Option<JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections, lets in-flight requests finish and
    /// stops the refresh worker.
    pub async fn shutdown(self) {
        let _ = self.stop.send(true);
        let _ = self.server.await;
        if let Some(w) = self.worker {
            let _ = w.await;
        }
    }
}

/// Serves `state` on `bind` until shut down.
pub async fn serve_api(state: AppState, bind: SocketAddr) -> Result<ServiceHandle, ServiceError> {
    let (stop, _) = watch::channel(false);
    let (addr, server) = spawn_server(state, bind, stop.subscribe()).await?;
    Ok(ServiceHandle {
        addr,
        stop,
        server,
        worker: None,
    })
}

async fn spawn_server(
    state: AppState,
    bind: SocketAddr,
    mut stop: watch::Receiver<bool>,
) -> Result<(SocketAddr, JoinHandle<()>), ServiceError> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|source| ServiceError::BindFailure { addr: bind, source })?;
    let addr = listener
        .local_addr()
        .map_err(|source| ServiceError::BindFailure { addr: bind, source })?;
    let app = router(state);
    let server = tokio::spawn(async move {
        let serve = axum::serve(listener, app).with_graceful_shutdown(async move {
            let _ = stop.wait_for(|s| *s).await;
        });
        if let Err(e) = serve.await {
            tracing::error!(error = %e, "server stopped");
        }
    });
    tracing::info!(%addr, "listening");
    Ok((addr, server))
}

/// Opens the stores named in `config`, starts the API and, when a source is
/// configured with a positive period, the refresh worker.
pub async fn start(config: &ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    let store = SnapshotStore::open(&config.snapshot_dir).map_err(|e| ServiceError::StoreUnavailable(e.to_string()))?;
    let watchlist =
        WatchlistStore::open(config.watchlist_file()).map_err(|e| ServiceError::StoreUnavailable(e.to_string()))?;
    let catalog = match &config.catalog_path {
        Some(p) => Catalog::load(Some(p)).map_err(|e| ServiceError::StoreUnavailable(e.to_string()))?,
        None => Catalog::bundled().clone(),
    };
    let events = PolicyEvent::load(config.events_path.as_deref()).map_err(|e| ServiceError::StoreUnavailable(e.to_string()))?;
    let state = AppState::new(store, catalog, events, watchlist);

    let (stop, _) = watch::channel(false);
    let (addr, server) = spawn_server(state.clone(), config.bind, stop.subscribe()).await?;
    let worker = match (&config.trends_base_url, config.refresh_hours > 0.0) {
        (Some(url), true) => {
            let mut client_config = ClientConfig::new(url.clone());
            client_config.requests_per_minute = config.requests_per_minute;
            let client = TrendsClient::new(client_config).map_err(|e| ServiceError::StoreUnavailable(e.to_string()))?;
            let period = Duration::from_secs_f64(config.refresh_hours * 3600.0);
            Some(tokio::spawn(refresh_loop(state, client, period, stop.subscribe())))
        }
        _ => None,
    };
    Ok(ServiceHandle {
        addr,
        stop,
        server,
        worker,
    })
}

/// The single ingestion worker: pulls a fresh snapshot every `period` and
/// commits it. Requests keep seeing the previous snapshot until the commit.
async fn refresh_loop(state: AppState, client: TrendsClient, period: Duration, mut stop: watch::Receiver<bool>) {
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    // an empty store is filled at once, otherwise the first pull waits a period
    if !matches!(state.store().head(), Ok(None)) {
        ticker.tick().await;
    }
    loop {
        tokio::select! {
            _ = ticker.tick() => refresh_once(&state, &client).await,
            changed = stop.changed() => {
                if changed.is_err() || *stop.borrow() {
                    break;
                }
            }
        }
    }
}

async fn refresh_once(state: &AppState, client: &TrendsClient) {
    let head = state.store().load_head().ok();
    let today = Utc::now().date_naive();
    let plan = plan_for(head.as_ref(), today);
    let indicators = match &head {
        Some(s) => s.indicators.clone(),
        None => vec![ingest::bundled_unemployment(), ingest::bundled_medicaid()],
    };
    match pull_snapshot(client, state.catalog(), &plan, indicators).await {
        Ok(snapshot) => match state.store().save_and_commit(&snapshot) {
            Ok(hash) => tracing::info!(snapshot = %hash, "committed refreshed snapshot"),
            Err(e) => tracing::error!(error = %e, "cannot commit refreshed snapshot"),
        },
        Err(e) => tracing::warn!(error = %e, "refresh failed; keeping the current snapshot"),
    }
}

/// Extends the committed snapshot's windows to `today`, keeping its shape.
fn plan_for(head: Option<&Snapshot>, today: NaiveDate) -> PullPlan {
    let (y, m, d) = DEFAULT_NATIONAL_START;
    let default_start = NaiveDate::from_ymd_opt(y, m, d).expect("valid date");
    let national_start = head
        .and_then(|s| {
            s.national
                .iter()
                .filter(|x| x.granularity == Granularity::Weekly)
                .filter_map(|x| x.points().first().map(|p| p.date))
                .min()
        })
        .unwrap_or(default_start)
        .min(today);
    let state_days = head
        .map(|s| s.state_window.window.days() as u64 - 1)
        .unwrap_or(DEFAULT_STATE_WINDOW_DAYS);
    let state_from = today.checked_sub_days(Days::new(state_days)).unwrap_or(today);
    let state_weekly_queries: BTreeSet<String> = head
        .map(|s| s.state_weekly.iter().map(|x| x.query_id.clone()).collect())
        .unwrap_or_default();
    PullPlan {
        national_window: DateWindow::new(national_start, today).expect("start precedes today"),
        granularity: Granularity::Weekly,
        state_window: DateWindow::new(state_from, today).expect("start precedes today"),
        state_weekly_queries: state_weekly_queries.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use infoveil_core::fixtures::{self, reference_snapshot};

    #[test]
    fn refresh_plan_keeps_the_snapshot_shape() {
        let s = reference_snapshot(fixtures::DEFAULT_SEED);
        let today: NaiveDate = "2021-06-30".parse().unwrap();
        let plan = plan_for(Some(&s), today);
        assert_eq!(plan.national_window.from, fixtures::national_start());
        assert_eq!(plan.national_window.to, today);
        assert_eq!(plan.state_window.days(), s.state_window.window.days());
        assert_eq!(plan.state_weekly_queries.len(), fixtures::STATE_WEEKLY_QUERIES.len());

        let empty = plan_for(None, today);
        assert_eq!(empty.state_window.days(), DEFAULT_STATE_WINDOW_DAYS as i64 + 1);
        assert!(empty.state_weekly_queries.is_empty());
    }
}

//! HTTP API over committed snapshots, plus watchlist-driven alerting.
//!
//! Every read endpoint is a pure function of the committed snapshot and
//! the request parameters. The store's `HEAD` is checked on each request,
//! so a snapshot committed by the refresh worker (or by a separate ingest
//! run) is picked up without a restart.

pub mod alerts;
mod api;
pub mod config;
mod server;
pub mod watchlist;

pub use alerts::{alert_report, evaluate_alerts, Alert, AlertReport, AlertRule};
pub use api::{router, AppState, ErrorBody};
pub use config::{ConfigError, ServiceConfig};
pub use server::{serve_api, start, ServiceError, ServiceHandle};
pub use watchlist::{Watchlist, WatchlistEntry, WatchlistError, WatchlistStore};

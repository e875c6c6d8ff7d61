//! Search-trend infoveillance analytics.
//!
//! The crate covers the query catalog, RSV quantization, file ingestion and
//! snapshots, state-level correlation and PCA typologies, lead-lag analysis
//! against real-world indicators, and census-region aggregation. The
//! [`report`] module renders every analytic as a deterministic payload shared
//! by the CLI and the HTTP API.

pub mod analytics;
pub mod canon;
pub mod catalog;
pub mod fixtures;
pub mod geo;
pub mod ingest;
pub mod leadlag;
pub mod linalg;
pub mod panel;
pub mod query;
pub mod report;
pub mod rsv;
pub mod series;
pub mod snapshot;
mod stats;

pub use catalog::{Catalog, Ideology, Theme, ThemedQuery};
pub use panel::StatePanel;
pub use query::QueryExpr;
pub use series::{DateWindow, Granularity, IndicatorSeries, RsvPoint, RsvSeries, ValueSeries};
pub use snapshot::{Snapshot, SnapshotStore};
pub use stats::pearson;

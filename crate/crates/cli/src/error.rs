use std::path::PathBuf;
use std::process::ExitCode;

use infoveil_core::catalog::CatalogError;
use infoveil_core::ingest::IngestError;
use infoveil_core::leadlag::LeadLagError;
use infoveil_core::report::ReportError;
use infoveil_core::snapshot::SnapshotError;
use infoveil_service::{ConfigError, ServiceError, WatchlistError};
use infoveil_trends::{PullError, TrendsError};
use thiserror::Error;

/// Process exit codes. Kept stable for scripts.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const INVALID_INPUT: u8 = 3;
    pub const NOT_FOUND: u8 = 4;
    pub const ANALYSIS: u8 = 5;
    pub const SOURCE: u8 = 6;
    pub const IO: u8 = 7;
    pub const SERVICE: u8 = 8;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("snapshot file {path}: {reason}")]
    SnapshotFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Events(#[from] LeadLagError),
    #[error(transparent)]
    Watchlist(#[from] WatchlistError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pull(#[from] PullError),
    #[error(transparent)]
    Source(#[from] TrendsError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Report(e) => match e {
                ReportError::InvalidParameter(_) => exit::USAGE,
                ReportError::Analytics(_) | ReportError::LeadLag(_) => exit::ANALYSIS,
                _ => exit::NOT_FOUND,
            },
            CliError::Snapshot(e) => match e {
                SnapshotError::NotFound(_) | SnapshotError::NoHead => exit::NOT_FOUND,
                SnapshotError::Io(_) => exit::IO,
                _ => exit::INVALID_INPUT,
            },
            CliError::SnapshotFile { .. }
            | CliError::Ingest(_)
            | CliError::Catalog(_)
            | CliError::Events(_)
            | CliError::Config(_) => exit::INVALID_INPUT,
            CliError::Watchlist(WatchlistError::Storage { .. }) => exit::IO,
            CliError::Watchlist(_) => exit::INVALID_INPUT,
            CliError::Pull(PullError::Fetch { .. }) | CliError::Source(_) => exit::SOURCE,
            CliError::Pull(_) => exit::INVALID_INPUT,
            CliError::Service(ServiceError::BindFailure { .. }) => exit::SERVICE,
            CliError::Service(ServiceError::StoreUnavailable(_)) => exit::IO,
            CliError::Io { .. } => exit::IO,
        }
    }
}

//! Versioned watchlist with optimistic concurrency.
//!
//! Updates are serialized behind a writer lock and the new list is
//! persisted before it becomes visible, so readers only ever observe a
//! complete list.

use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use infoveil_core::{geo, Catalog};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alerts::AlertRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatchlistEntry {
    pub query_id: String,
    #[serde(default = "national")]
    pub geo: String,
    pub rule: AlertRule,
}

fn national() -> String {
    geo::NATIONAL.to_string()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Watchlist {
    pub version: u64,
    pub entries: Vec<WatchlistEntry>,
}

#[derive(Debug, Error)]
pub enum WatchlistError {
    #[error("watchlist is at version {current}, update was based on {expected}")]
    VersionConflict { expected: u64, current: u64 },
    #[error("entry {index}: {reason}")]
    InvalidEntry { index: usize, reason: String },
    #[error("watchlist file {path}: {reason}")]
    Storage { path: PathBuf, reason: String },
}

impl Watchlist {
    pub fn validate(entries: &[WatchlistEntry], catalog: &Catalog) -> Result<(), WatchlistError> {
        for (index, e) in entries.iter().enumerate() {
            let invalid = |reason: String| WatchlistError::InvalidEntry { index, reason };
            if catalog.get(&e.query_id).is_none() {
                return Err(invalid(format!("unknown query id {:?}", e.query_id)));
            }
            if !geo::is_valid_geo(&e.geo) {
                return Err(invalid(format!("unknown geography {:?}", e.geo)));
            }
            e.rule.validate().map_err(invalid)?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct WatchlistStore {
    path: Option<PathBuf>,
    current: RwLock<Watchlist>,
    writer: Mutex<()>,
}

impl WatchlistStore {
    /// A store that lives only in memory.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            current: RwLock::new(Watchlist::default()),
            writer: Mutex::new(()),
        }
    }

    /// Opens (or starts) a file-backed watchlist.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, WatchlistError> {
        let path = path.into();
        let current = match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| storage(&path, e))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Watchlist::default(),
            Err(e) => return Err(storage(&path, e)),
        };
        Ok(Self {
            path: Some(path),
            current: RwLock::new(current),
            writer: Mutex::new(()),
        })
    }

    pub fn get(&self) -> Watchlist {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Replaces the entries if `expected_version` is still current; the
    /// version then increments by one.
    pub fn replace(
        &self,
        expected_version: u64,
        entries: Vec<WatchlistEntry>,
        catalog: &Catalog,
    ) -> Result<Watchlist, WatchlistError> {
        Watchlist::validate(&entries, catalog)?;
        let _writer = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let current = self.get().version;
        if current != expected_version {
            return Err(WatchlistError::VersionConflict {
                expected: expected_version,
                current,
            });
        }
        let next = Watchlist {
            version: current + 1,
            entries,
        };
        if let Some(path) = &self.path {
            persist(path, &next)?;
        }
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = next.clone();
        Ok(next)
    }
}

fn storage(path: &Path, e: impl std::fmt::Display) -> WatchlistError {
    WatchlistError::Storage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn persist(path: &Path, list: &Watchlist) -> Result<(), WatchlistError> {
    let bytes = serde_json::to_vec_pretty(list).map_err(|e| storage(path, e))?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, bytes).map_err(|e| storage(path, e))?;
    std::fs::rename(&tmp, path).map_err(|e| storage(path, e))
}

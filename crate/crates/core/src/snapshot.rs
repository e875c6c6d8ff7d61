//! Immutable, content-addressed dataset snapshots and their on-disk store.
//!
//! A snapshot file holds the canonical JSON payload; its name is the SHA-256
//! of those exact bytes. `HEAD` names the latest committed snapshot and is
//! replaced atomically (write to a temporary file, then rename).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::panel::StatePanel;
use crate::series::{Granularity, IndicatorSeries, RsvSeries};

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot {0} not found")]
    NotFound(String),
    #[error("snapshot {hash} is corrupt: {reason}")]
    CorruptSnapshot { hash: String, reason: String },
    #[error("duplicate series ({0})")]
    DuplicateSeries(String),
    #[error("store has no committed snapshot")]
    NoHead,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub created_at: DateTime<Utc>,
    pub catalog_version: String,
    /// National series (weekly over the long window, plus any finer pulls).
    pub national: Vec<RsvSeries>,
    pub state_weekly: Vec<RsvSeries>,
    pub state_window: StatePanel,
    pub indicators: Vec<IndicatorSeries>,
    #[serde(skip)]
    content_hash: String,
}

fn series_key(s: &RsvSeries) -> (String, String, Granularity) {
    (s.query_id.clone(), s.geo.clone(), s.granularity)
}

impl Snapshot {
    /// Assembles a snapshot, sorting every set into canonical order and
    /// computing the content hash.
    pub fn new(
        created_at: DateTime<Utc>,
        catalog_version: impl Into<String>,
        mut national: Vec<RsvSeries>,
        mut state_weekly: Vec<RsvSeries>,
        state_window: StatePanel,
        mut indicators: Vec<IndicatorSeries>,
    ) -> Result<Self, SnapshotError> {
        for set in [&mut national, &mut state_weekly] {
            set.sort_by_key(series_key);
            if let Some(w) = set.windows(2).find(|w| series_key(&w[0]) == series_key(&w[1])) {
                let (q, g, gran) = series_key(&w[0]);
                return Err(SnapshotError::DuplicateSeries(format!("{q}, {g}, {gran}")));
            }
        }
        indicators.sort_by(|a, b| a.name.cmp(&b.name));
        if let Some(w) = indicators.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(SnapshotError::DuplicateSeries(w[0].name.clone()));
        }
        let mut snapshot = Snapshot {
            created_at,
            catalog_version: catalog_version.into(),
            national,
            state_weekly,
            state_window,
            indicators,
            content_hash: String::new(),
        };
        snapshot.content_hash = hash_bytes(&snapshot.canonical_bytes());
        Ok(snapshot)
    }

    /// Hex SHA-256 of the canonical payload.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    /// Canonical serialization: fixed field order, shortest round-trip
    /// float formatting, no whitespace.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("snapshot serializes")
    }

    /// Parses a snapshot file written outside a store. The hash is
    /// recomputed from the canonical re-serialization.
    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        let mut snapshot: Snapshot = serde_json::from_slice(bytes)?;
        snapshot.content_hash = hash_bytes(&snapshot.canonical_bytes());
        Ok(snapshot)
    }

    pub fn series(&self, query_id: &str, geo: &str, granularity: Granularity) -> Option<&RsvSeries> {
        self.all_series()
            .find(|s| s.query_id == query_id && s.geo == geo && s.granularity == granularity)
    }

    /// The most finely grained series available for (query, geo).
    pub fn finest_series(&self, query_id: &str, geo: &str) -> Option<&RsvSeries> {
        self.all_series()
            .filter(|s| s.query_id == query_id && s.geo == geo)
            .max_by_key(|s| s.granularity.fineness())
    }

    pub fn all_series(&self) -> impl Iterator<Item = &RsvSeries> {
        self.national.iter().chain(&self.state_weekly)
    }

    pub fn indicator(&self, name: &str) -> Option<&IndicatorSeries> {
        self.indicators.iter().find(|i| i.name == name)
    }
}

fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn is_hash(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

/// Directory of snapshot files plus a `HEAD` pointer.
#[derive(Debug, Clone)]
pub struct SnapshotStore {
    dir: PathBuf,
}

impl SnapshotStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SnapshotError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    /// Writes the snapshot (idempotent) and returns its content hash.
    pub fn save(&self, snapshot: &Snapshot) -> Result<String, SnapshotError> {
        let bytes = snapshot.canonical_bytes();
        let hash = hash_bytes(&bytes);
        let path = self.path_for(&hash);
        if !path.exists() {
            self.write_atomic(&path, &bytes)?;
        }
        Ok(hash)
    }

    /// Points `HEAD` at an already saved snapshot.
    pub fn commit(&self, hash: &str) -> Result<(), SnapshotError> {
        if !is_hash(hash) || !self.path_for(hash).exists() {
            return Err(SnapshotError::NotFound(hash.to_string()));
        }
        self.write_atomic(&self.dir.join("HEAD"), hash.as_bytes())
    }

    pub fn save_and_commit(&self, snapshot: &Snapshot) -> Result<String, SnapshotError> {
        let hash = self.save(snapshot)?;
        self.commit(&hash)?;
        Ok(hash)
    }

    pub fn head(&self) -> Result<Option<String>, SnapshotError> {
        match fs::read_to_string(self.dir.join("HEAD")) {
            Ok(s) => Ok(Some(s.trim().to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn load(&self, hash: &str) -> Result<Snapshot, SnapshotError> {
        if !is_hash(hash) {
            return Err(SnapshotError::NotFound(hash.to_string()));
        }
        let bytes = match fs::read(self.path_for(hash)) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(SnapshotError::NotFound(hash.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let corrupt = |reason: String| SnapshotError::CorruptSnapshot {
            hash: hash.to_string(),
            reason,
        };
        let actual = hash_bytes(&bytes);
        if actual != hash {
            return Err(corrupt(format!("content hashes to {actual}")));
        }
        let mut snapshot: Snapshot = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        snapshot.content_hash = actual;
        Ok(snapshot)
    }

    pub fn load_head(&self) -> Result<Snapshot, SnapshotError> {
        let hash = self.head()?.ok_or(SnapshotError::NoHead)?;
        self.load(&hash)
    }

    /// Hashes of all stored snapshots, sorted.
    pub fn list(&self) -> Result<Vec<String>, SnapshotError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            if let Some(hash) = name.to_str().and_then(|n| n.strip_suffix(".json")) {
                if is_hash(hash) {
                    out.push(hash.to_string());
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn write_atomic(&self, target: &Path, bytes: &[u8]) -> Result<(), SnapshotError> {
        let tmp = self.dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            rand::random::<u64>()
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, target)?;
        Ok(())
    }
}

//! Service configuration: an optional TOML file, then environment overrides.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

pub const BIND_ENV: &str = "INFOVEIL_BIND";
pub const SNAPSHOT_DIR_ENV: &str = "INFOVEIL_SNAPSHOT_DIR";
pub const TRENDS_BASE_URL_ENV: &str = infoveil_trends::BASE_URL_ENV;
pub const REFRESH_HOURS_ENV: &str = "INFOVEIL_REFRESH_HOURS";

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_REFRESH_HOURS: f64 = 24.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid value {value:?} for {key}: {reason}")]
    Value { key: &'static str, value: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub snapshot_dir: PathBuf,
    /// Defaults to `watchlist.json` inside the snapshot directory.
    pub watchlist_path: Option<PathBuf>,
    /// Source for the refresh worker; no worker runs without one.
    pub trends_base_url: Option<String>,
    /// Re-ingestion period. Zero disables the worker.
    pub refresh_hours: f64,
    pub requests_per_minute: u32,
    /// Policy events file (`name,date`); the bundled events otherwise.
    pub events_path: Option<PathBuf>,
    /// Query catalog file; the bundled catalog otherwise.
    pub catalog_path: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: DEFAULT_BIND.parse().expect("valid default address"),
            snapshot_dir: PathBuf::from("snapshots"),
            watchlist_path: None,
            trends_base_url: None,
            refresh_hours: DEFAULT_REFRESH_HOURS,
            requests_per_minute: infoveil_trends::DEFAULT_REQUESTS_PER_MINUTE,
            events_path: None,
            catalog_path: None,
        }
    }
}

impl ServiceConfig {
    /// Reads `file` (if given) and applies environment overrides.
    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Applies overrides from `lookup`; empty values are ignored.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        let get = |k: &str| lookup(k).filter(|v| !v.trim().is_empty());
        if let Some(v) = get(BIND_ENV) {
            self.bind = v.parse().map_err(|e: std::net::AddrParseError| ConfigError::Value {
                key: BIND_ENV,
                value: v.clone(),
                reason: e.to_string(),
            })?;
        }
        if let Some(v) = get(SNAPSHOT_DIR_ENV) {
            self.snapshot_dir = PathBuf::from(v);
        }
        if let Some(v) = get(TRENDS_BASE_URL_ENV) {
            self.trends_base_url = Some(v);
        }
        if let Some(v) = get(REFRESH_HOURS_ENV) {
            let hours: f64 = v.parse().map_err(|e: std::num::ParseFloatError| ConfigError::Value {
                key: REFRESH_HOURS_ENV,
                value: v.clone(),
                reason: e.to_string(),
            })?;
            self.refresh_hours = hours;
        }
        self.validate()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.refresh_hours.is_finite() && self.refresh_hours >= 0.0) {
            return Err(ConfigError::Value {
                key: "refresh_hours",
                value: self.refresh_hours.to_string(),
                reason: "must be a non-negative number of hours".into(),
            });
        }
        if self.requests_per_minute == 0 {
            return Err(ConfigError::Value {
                key: "requests_per_minute",
                value: "0".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn watchlist_file(&self) -> PathBuf {
        self.watchlist_path
            .clone()
            .unwrap_or_else(|| self.snapshot_dir.join("watchlist.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("infoveil.toml");
        std::fs::write(&path, "bind = \"0.0.0.0:9000\"\nsnapshot_dir = \"/data\"\nrefresh_hours = 6\n").unwrap();
        let mut c = ServiceConfig::from_file(&path).unwrap();
        assert_eq!(c.bind.port(), 9000);
        assert_eq!(c.refresh_hours, 6.0);
        c.apply_env(|k| match k {
            BIND_ENV => Some("127.0.0.1:7000".into()),
            REFRESH_HOURS_ENV => Some("0".into()),
            TRENDS_BASE_URL_ENV => Some("".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.bind.port(), 7000);
        assert_eq!(c.snapshot_dir, PathBuf::from("/data"));
        assert_eq!(c.refresh_hours, 0.0);
        assert_eq!(c.trends_base_url, None);
        assert_eq!(c.watchlist_file(), PathBuf::from("/data/watchlist.json"));
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ServiceConfig::default();
        assert!(c.apply_env(|k| (k == REFRESH_HOURS_ENV).then(|| "-1".into())).is_err());
        let mut c = ServiceConfig::default();
        assert!(c.apply_env(|k| (k == BIND_ENV).then(|| "nowhere".into())).is_err());
        assert!(toml::from_str::<ServiceConfig>("colour = 1").is_err());
    }
}

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Duration;

use chrono::{NaiveDate, Utc};
use infoveil_core::geo;
use infoveil_core::{DateWindow, Granularity, QueryExpr, RsvPoint, RsvSeries};
use rand::Rng;
use reqwest::StatusCode;
use thiserror::Error;

use crate::wire::{ByStateResponse, OverTimeResponse, BY_STATE_PATH, OVER_TIME_PATH};

/// Environment variable selecting the source base URL.
pub const BASE_URL_ENV: &str = "INFOVEIL_TRENDS_BASE_URL";
pub const DEFAULT_REQUESTS_PER_MINUTE: u32 = 30;

#[derive(Debug, Error)]
pub enum TrendsError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("source unavailable after {attempts} attempt(s): {reason}")]
    SourceUnavailable { attempts: u32, reason: String },
    #[error("still throttled after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

/// Exponential backoff with symmetric multiplicative jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts including the first request.
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
    /// Relative jitter; 0.2 spreads each delay over ±20%.
    pub jitter: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
            factor: 2.0,
            jitter: 0.2,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based), with `unit` in [-1, 1]
    /// selecting the jitter.
    pub fn delay(&self, retry: u32, unit: f64) -> Duration {
        let nominal = self.base_delay.as_secs_f64() * self.factor.powi(retry.saturating_sub(1) as i32);
        Duration::from_secs_f64((nominal * (1.0 + self.jitter * unit.clamp(-1.0, 1.0))).max(0.0))
    }
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub base_url: String,
    /// Ceiling shared by every client talking to the same host.
    pub requests_per_minute: u32,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl ClientConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            requests_per_minute: DEFAULT_REQUESTS_PER_MINUTE,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(30),
        }
    }

    /// Reads the base URL from `INFOVEIL_TRENDS_BASE_URL`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var(BASE_URL_ENV).ok().filter(|v| !v.is_empty()).map(Self::new)
    }
}

/// Spaces requests at least `period` apart, in arrival order. Burst is one.
#[derive(Debug)]
struct Limiter {
    period: Duration,
    next: tokio::sync::Mutex<Option<tokio::time::Instant>>,
}

impl Limiter {
    fn new(requests_per_minute: u32) -> Self {
        Self {
            period: Duration::from_secs_f64(60.0 / f64::from(requests_per_minute.max(1))),
            next: tokio::sync::Mutex::new(None),
        }
    }

    /// Reserves the next free slot and sleeps until it arrives.
    async fn until_ready(&self) {
        let slot = {
            let mut next = self.next.lock().await;
            let now = tokio::time::Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.period);
            slot
        };
        tokio::time::sleep_until(slot).await;
    }
}

/// Process-wide limiter for `host`. The first registration for a host fixes
/// its ceiling; later clients share it regardless of their own setting.
fn shared_limiter(host: &str, requests_per_minute: u32) -> Arc<Limiter> {
    static REGISTRY: OnceLock<Mutex<HashMap<String, Arc<Limiter>>>> = OnceLock::new();
    let mut registry = REGISTRY
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    registry
        .entry(host.to_string())
        .or_insert_with(|| Arc::new(Limiter::new(requests_per_minute)))
        .clone()
}

/// State-level aggregate for one query: 51 entries in state-code order,
/// `None` where the source reported no value.
#[derive(Debug, Clone, PartialEq)]
pub struct StateValues {
    pub query_id: String,
    pub window: DateWindow,
    pub values: Vec<(String, Option<u8>)>,
}

impl StateValues {
    pub fn missing(&self) -> usize {
        self.values.iter().filter(|(_, v)| v.is_none()).count()
    }
}

#[derive(Clone)]
pub struct TrendsClient {
    http: reqwest::Client,
    base_url: String,
    limiter: Arc<Limiter>,
    retry: RetryPolicy,
}

impl std::fmt::Debug for TrendsClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrendsClient")
            .field("base_url", &self.base_url)
            .field("retry", &self.retry)
            .finish_non_exhaustive()
    }
}

fn host_key(base_url: &str) -> Result<String, TrendsError> {
    let url = reqwest::Url::parse(base_url).map_err(|e| TrendsError::InvalidRequest(format!("bad base URL: {e}")))?;
    let host = url
        .host_str()
        .ok_or_else(|| TrendsError::InvalidRequest(format!("base URL {base_url} has no host")))?;
    Ok(match url.port_or_known_default() {
        Some(port) => format!("{host}:{port}"),
        None => host.to_string(),
    })
}

fn malformed(message: impl Into<String>) -> TrendsError {
    TrendsError::MalformedResponse(message.into())
}

impl TrendsClient {
    pub fn new(config: ClientConfig) -> Result<Self, TrendsError> {
        let limiter = shared_limiter(&host_key(&config.base_url)?, config.requests_per_minute);
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| TrendsError::InvalidRequest(e.to_string()))?;
        Ok(Self {
            http,
            base_url: config.base_url,
            limiter,
            retry: config.retry,
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// GETs `path`, retrying throttling, server errors and transport
    /// failures with backoff. Every attempt waits for the shared limiter.
    async fn get(&self, path: &str, params: &[(&str, String)]) -> Result<String, TrendsError> {
        let url = format!("{}{}", self.base_url, path);
        let max = self.retry.max_attempts.max(1);
        let mut throttled = false;
        let mut reason = String::new();
        for attempt in 1..=max {
            if attempt > 1 {
                let unit = rand::rng().random_range(-1.0..=1.0);
                let delay = self.retry.delay(attempt - 1, unit);
                tracing::debug!(attempt, ?delay, %reason, "retrying trends request");
                tokio::time::sleep(delay).await;
            }
            self.limiter.until_ready().await;
            match self.http.get(&url).query(params).send().await {
                Ok(resp) if resp.status().is_success() => {
                    return resp
                        .text()
                        .await
                        .map_err(|e| malformed(format!("body could not be read: {e}")));
                }
                Ok(resp) if resp.status() == StatusCode::TOO_MANY_REQUESTS => {
                    throttled = true;
                    reason = "HTTP 429".into();
                }
                Ok(resp) if resp.status().is_server_error() => {
                    throttled = false;
                    reason = format!("HTTP {}", resp.status().as_u16());
                }
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    let body = resp.text().await.unwrap_or_default();
                    return Err(TrendsError::SourceUnavailable {
                        attempts: attempt,
                        reason: format!("HTTP {status}: {body}"),
                    });
                }
                Err(e) => {
                    throttled = false;
                    reason = e.to_string();
                }
            }
        }
        Err(if throttled {
            TrendsError::RateLimited { attempts: max }
        } else {
            TrendsError::SourceUnavailable { attempts: max, reason }
        })
    }

    /// RSV over time for one (query, geography), validated before return.
    pub async fn fetch_interest_over_time(
        &self,
        query_id: &str,
        expr: &QueryExpr,
        geo_code: &str,
        window: &DateWindow,
        granularity: Granularity,
    ) -> Result<RsvSeries, TrendsError> {
        if !geo::is_valid_geo(geo_code) {
            return Err(TrendsError::InvalidRequest(format!("unknown geography {geo_code:?}")));
        }
        if granularity == Granularity::WindowAggregate {
            return Err(TrendsError::InvalidRequest("over-time pulls need a time granularity".into()));
        }
        let params = [
            ("q", expr.canonical_text().to_string()),
            ("geo", geo_code.to_string()),
            ("from", window.from.to_string()),
            ("to", window.to.to_string()),
            ("gran", granularity.to_string()),
        ];
        let body = self.get(OVER_TIME_PATH, &params).await?;
        let parsed: OverTimeResponse = serde_json::from_str(&body).map_err(|e| malformed(e.to_string()))?;
        let points = parsed
            .points
            .iter()
            .map(|p| {
                let date = NaiveDate::parse_from_str(&p.date, "%Y-%m-%d")
                    .map_err(|_| malformed(format!("bad date {:?}", p.date)))?;
                if !window.contains(date) {
                    return Err(malformed(format!("{date} lies outside {window}")));
                }
                RsvPoint::new(date, p.value).map_err(|e| malformed(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let series = RsvSeries::new(query_id, geo_code, granularity, points).map_err(|e| malformed(e.to_string()))?;
        series.check_normalized().map_err(|e| malformed(e.to_string()))?;
        Ok(series.with_retrieved_at(Utc::now()))
    }

    /// Window-aggregate RSV for every state; absent states become `None`.
    pub async fn fetch_interest_by_state(
        &self,
        query_id: &str,
        expr: &QueryExpr,
        window: &DateWindow,
    ) -> Result<StateValues, TrendsError> {
        let params = [
            ("q", expr.canonical_text().to_string()),
            ("from", window.from.to_string()),
            ("to", window.to.to_string()),
        ];
        let body = self.get(BY_STATE_PATH, &params).await?;
        let parsed: ByStateResponse = serde_json::from_str(&body).map_err(|e| malformed(e.to_string()))?;
        let mut reported: HashMap<&str, Option<u8>> = HashMap::new();
        for s in &parsed.states {
            if geo::lookup(&s.geo).is_err() {
                return Err(malformed(format!("unknown state {:?}", s.geo)));
            }
            let value = match s.value {
                Some(v) if (0..=100).contains(&v) => Some(v as u8),
                Some(v) => return Err(malformed(format!("RSV {v} for {} is outside 0..=100", s.geo))),
                None => None,
            };
            if reported.insert(s.geo.as_str(), value).is_some() {
                return Err(malformed(format!("state {} reported twice", s.geo)));
            }
        }
        let values: Vec<(String, Option<u8>)> = geo::state_codes()
            .map(|code| (code.to_string(), reported.get(code).copied().flatten()))
            .collect();
        let max = values.iter().filter_map(|(_, v)| *v).max();
        if matches!(max, Some(m) if m > 0 && m != 100) {
            return Err(malformed(format!("state values peak at {} instead of 100", max.unwrap_or(0))));
        }
        Ok(StateValues {
            query_id: query_id.to_string(),
            window: *window,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_schedule() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(1, 0.0), Duration::from_secs(1));
        assert_eq!(p.delay(3, 0.0), Duration::from_secs(4));
        assert_eq!(p.delay(2, 1.0), Duration::from_secs_f64(2.4));
        assert_eq!(p.delay(2, -1.0), Duration::from_secs_f64(1.6));
        assert_eq!(p.delay(1, 7.0), Duration::from_secs_f64(1.2));
    }

    #[test]
    fn host_keys_include_port() {
        assert_eq!(host_key("http://127.0.0.1:8080").unwrap(), "127.0.0.1:8080");
        assert_eq!(host_key("https://example.org/api").unwrap(), "example.org:443");
        assert!(host_key("not a url").is_err());
    }
}

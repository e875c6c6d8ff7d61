//! RSV quantization from raw search counts.
//!
//! Each entry's query count is divided by the total search count of its
//! geography/time bucket, then the shares are scaled so the largest maps to
//! 100 and rounded half away from zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RsvError {
    #[error("share panel is empty")]
    EmptyPanel,
    #[error("entry `{key}`: total search count must be positive and finite")]
    NonPositiveTotal { key: String },
    #[error("entry `{key}`: query search count must be non-negative and finite")]
    NegativeCount { key: String },
    #[error("duplicate panel key `{0}`")]
    DuplicateKey(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShareAxis {
    TimeWithinGeo,
    GeoWithinWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareEntry {
    /// Date (`YYYY-MM-DD`) or geography code, depending on the axis.
    pub key: String,
    pub query_search_count: f64,
    pub total_search_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSharePanel {
    pub axis: ShareAxis,
    entries: Vec<ShareEntry>,
}

impl RawSharePanel {
    pub fn new(axis: ShareAxis, entries: Vec<ShareEntry>) -> Result<Self, RsvError> {
        let mut keys = std::collections::HashSet::new();
        for e in &entries {
            if !(e.total_search_count.is_finite() && e.total_search_count > 0.0) {
                return Err(RsvError::NonPositiveTotal { key: e.key.clone() });
            }
            if !(e.query_search_count.is_finite() && e.query_search_count >= 0.0) {
                return Err(RsvError::NegativeCount { key: e.key.clone() });
            }
            if !keys.insert(e.key.as_str()) {
                return Err(RsvError::DuplicateKey(e.key.clone()));
            }
        }
        Ok(Self { axis, entries })
    }

    /// Convenience constructor from parallel slices.
    pub fn from_counts<K: ToString>(
        axis: ShareAxis,
        keys: &[K],
        counts: &[f64],
        totals: &[f64],
    ) -> Result<Self, RsvError> {
        assert_eq!(keys.len(), counts.len());
        assert_eq!(keys.len(), totals.len());
        let entries = keys
            .iter()
            .zip(counts.iter().zip(totals))
            .map(|(k, (&q, &t))| ShareEntry {
                key: k.to_string(),
                query_search_count: q,
                total_search_count: t,
            })
            .collect();
        Self::new(axis, entries)
    }

    pub fn entries(&self) -> &[ShareEntry] {
        &self.entries
    }

    pub fn shares(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.query_search_count / e.total_search_count)
            .collect()
    }
}

/// Quantizes a share panel into integer RSVs, preserving entry order.
pub fn quantize_rsv(panel: &RawSharePanel) -> Result<Vec<(String, u8)>, RsvError> {
    if panel.entries.is_empty() {
        return Err(RsvError::EmptyPanel);
    }
    let values = quantize_shares(&panel.shares());
    Ok(panel
        .entries
        .iter()
        .zip(values)
        .map(|(e, v)| (e.key.clone(), v))
        .collect())
}

/// Scales non-negative shares to 0..=100 with the maximum mapping to 100.
/// All-zero input maps to all zeros.
pub fn quantize_shares(shares: &[f64]) -> Vec<u8> {
    let max = shares.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return vec![0; shares.len()];
    }
    shares
        .iter()
        .map(|&s| {
            if s == max {
                100
            } else {
                // f64::round rounds half away from zero
                (100.0 * s / max).round().clamp(0.0, 100.0) as u8
            }
        })
        .collect()
}

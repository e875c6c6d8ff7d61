use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::series::{DateWindow, RsvSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChangeOutcome {
    /// `(to_mean / from_mean - 1) * 100`, possibly clamped to the cap.
    Change { percent: f64, capped: bool },
    /// The baseline mean is zero: the change is undefined (a new topic).
    ZeroBaseline,
}

impl ChangeOutcome {
    pub fn percent(&self) -> Option<f64> {
        match self {
            ChangeOutcome::Change { percent, .. } => Some(*percent),
            ChangeOutcome::ZeroBaseline => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentChange {
    pub from_mean: f64,
    pub to_mean: f64,
    pub outcome: ChangeOutcome,
}

pub fn percent_change(
    series: &RsvSeries,
    from_window: &DateWindow,
    to_window: &DateWindow,
    cap: Option<f64>,
) -> Result<PercentChange, AnalyticsError> {
    let from: Vec<f64> = series.values_in(from_window).collect();
    let to: Vec<f64> = series.values_in(to_window).collect();
    percent_change_values(&from, &to, cap)
}

/// Percent change between the means of two samples.
pub fn percent_change_values(
    from: &[f64],
    to: &[f64],
    cap: Option<f64>,
) -> Result<PercentChange, AnalyticsError> {
    if from.is_empty() {
        return Err(AnalyticsError::EmptyWindow("from"));
    }
    if to.is_empty() {
        return Err(AnalyticsError::EmptyWindow("to"));
    }
    let from_mean = from.iter().sum::<f64>() / from.len() as f64;
    let to_mean = to.iter().sum::<f64>() / to.len() as f64;
    let outcome = if from_mean == 0.0 {
        ChangeOutcome::ZeroBaseline
    } else {
        // (to - from) * 100 / from keeps integer-valued means exact
        let percent = (to_mean - from_mean) * 100.0 / from_mean;
        match cap {
            Some(c) if percent > c => ChangeOutcome::Change {
                percent: c,
                capped: true,
            },
            _ => ChangeOutcome::Change {
                percent,
                capped: false,
            },
        }
    };
    Ok(PercentChange {
        from_mean,
        to_mean,
        outcome,
    })
}

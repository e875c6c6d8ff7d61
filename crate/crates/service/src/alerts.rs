//! Alert rules evaluated against a snapshot.

use chrono::{Days, NaiveDate};
use infoveil_core::analytics::{percent_change, ChangeOutcome};
use infoveil_core::canon::{fmt12, round12};
use infoveil_core::report::{CsvTable, Tabular};
use infoveil_core::leadlag::first_crossing;
use infoveil_core::{DateWindow, Granularity, RsvSeries, Snapshot};
use serde::{Deserialize, Serialize};

use crate::watchlist::Watchlist;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlertRule {
    /// Mean of the trailing `window_weeks` against the `window_weeks`
    /// before it. A non-negative threshold fires on rises of at least that
    /// many percent, a negative one on falls at least that deep.
    PercentChangeOver { window_weeks: u32, threshold_percent: f64 },
    /// First date the finest available series reaches `value`.
    ThresholdCross { value: u8 },
}

impl AlertRule {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            AlertRule::PercentChangeOver {
                window_weeks,
                threshold_percent,
            } => {
                if window_weeks == 0 {
                    return Err("window_weeks must be at least 1".into());
                }
                if !threshold_percent.is_finite() {
                    return Err("threshold_percent must be finite".into());
                }
            }
            AlertRule::ThresholdCross { value } => {
                if value > 100 {
                    return Err(format!("RSV threshold {value} exceeds 100"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    /// Hash of the snapshot the alert was computed from.
    pub snapshot: String,
    pub query_id: String,
    pub geo: String,
    pub rule: AlertRule,
    pub trigger_date: NaiveDate,
    /// Percent change for change rules, RSV for threshold rules.
    pub observed_value: f64,
}

/// Every watchlist entry that fires on `snapshot`, in watchlist order, at
/// most one alert per entry (its earliest trigger). Entries without data
/// are skipped.
pub fn evaluate_alerts(snapshot: &Snapshot, watchlist: &Watchlist) -> Vec<Alert> {
    watchlist
        .entries
        .iter()
        .filter_map(|e| {
            let (trigger_date, observed_value) = match e.rule {
                AlertRule::ThresholdCross { value } => {
                    let series = snapshot.finest_series(&e.query_id, &e.geo)?;
                    let date = first_crossing(series, value)?;
                    let v = series.points().iter().find(|p| p.date == date)?.value;
                    (date, f64::from(v))
                }
                AlertRule::PercentChangeOver {
                    window_weeks,
                    threshold_percent,
                } => {
                    let series = snapshot
                        .series(&e.query_id, &e.geo, Granularity::Weekly)
                        .or_else(|| snapshot.finest_series(&e.query_id, &e.geo))?;
                    first_change(series, window_weeks, threshold_percent)?
                }
            };
            Some(Alert {
                snapshot: snapshot.content_hash().to_string(),
                query_id: e.query_id.clone(),
                geo: e.geo.clone(),
                rule: e.rule,
                trigger_date,
                observed_value,
            })
        })
        .collect()
}

/// Alerts payload shared by the API and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertReport {
    pub watchlist_version: u64,
    pub alerts: Vec<Alert>,
}

pub fn alert_report(snapshot: &Snapshot, watchlist: &Watchlist) -> AlertReport {
    AlertReport {
        watchlist_version: watchlist.version,
        alerts: evaluate_alerts(snapshot, watchlist),
    }
}

impl Tabular for AlertReport {
    fn tables(&self) -> Vec<CsvTable> {
        let rows = self
            .alerts
            .iter()
            .map(|a| {
                let (kind, params) = match a.rule {
                    AlertRule::PercentChangeOver {
                        window_weeks,
                        threshold_percent,
                    } => ("percent_change_over", format!("{window_weeks}w {}", fmt12(threshold_percent))),
                    AlertRule::ThresholdCross { value } => ("threshold_cross", value.to_string()),
                };
                vec![
                    a.snapshot.clone(),
                    a.query_id.clone(),
                    a.geo.clone(),
                    kind.to_string(),
                    params,
                    a.trigger_date.to_string(),
                    fmt12(a.observed_value),
                ]
            })
            .collect();
        vec![CsvTable {
            name: "alerts",
            header: vec!["snapshot", "query_id", "geo", "rule", "parameters", "trigger_date", "observed_value"],
            rows,
        }]
    }
}

fn first_change(series: &RsvSeries, weeks: u32, threshold: f64) -> Option<(NaiveDate, f64)> {
    let start = series.points().first()?.date;
    let span = Days::new(7 * u64::from(weeks));
    series.points().iter().find_map(|p| {
        let to_from = p.date.checked_sub_days(span)?.succ_opt()?;
        let from_from = to_from.checked_sub_days(span)?;
        if from_from < start {
            return None;
        }
        let to = DateWindow::new(to_from, p.date).ok()?;
        let from = DateWindow::new(from_from, to_from.pred_opt()?).ok()?;
        let change = percent_change(series, &from, &to, None).ok()?;
        let ChangeOutcome::Change { percent, .. } = change.outcome else {
            return None;
        };
        let fires = if threshold >= 0.0 {
            percent >= threshold
        } else {
            percent <= threshold
        };
        fires.then(|| (p.date, round12(percent)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::watchlist::WatchlistEntry;
    use infoveil_core::fixtures::{self, reference_snapshot};
    use infoveil_core::RsvPoint;

    fn watch(query: &str, rule: AlertRule) -> Watchlist {
        Watchlist {
            version: 1,
            entries: vec![WatchlistEntry {
                query_id: query.into(),
                geo: "US".into(),
                rule,
            }],
        }
    }

    fn weekly(values: &[i64]) -> RsvSeries {
        let start: NaiveDate = "2020-01-05".parse().unwrap();
        let points = values
            .iter()
            .enumerate()
            .map(|(i, v)| RsvPoint::new(start + Days::new(7 * i as u64), *v).unwrap())
            .collect();
        RsvSeries::new("q", "US", Granularity::Weekly, points).unwrap()
    }

    #[test]
    fn threshold_cross_fires_on_the_planted_date() {
        let s = reference_snapshot(fixtures::DEFAULT_SEED);
        let w = watch(fixtures::ZERO_BASELINE_QUERY, AlertRule::ThresholdCross { value: 50 });
        let alerts = evaluate_alerts(&s, &w);
        assert_eq!(alerts.len(), 1);
        assert_eq!(alerts[0].trigger_date, "2020-03-23".parse::<NaiveDate>().unwrap());
        assert_eq!(alerts[0].snapshot, s.content_hash());
        assert!(alerts[0].observed_value >= 50.0);
        assert_eq!(alerts, evaluate_alerts(&s, &w));
    }

    #[test]
    fn trailing_change_windows() {
        let rule_up = 100.0;
        let flat = weekly(&[40; 20]);
        assert_eq!(first_change(&flat, 4, rule_up), None);
        // 20 for eight weeks, then 60: the trailing mean first doubles at
        // week 9, (2 * 20 + 2 * 60) / 4 against 20
        let mut v = vec![20; 8];
        v.extend([60; 8]);
        let jump = weekly(&v);
        let (date, pct) = first_change(&jump, 4, rule_up).unwrap();
        assert_eq!(pct, 100.0);
        assert_eq!(date, jump.points()[9].date);
        assert_eq!(first_change(&jump, 4, -10.0), None);
        let mut v = vec![80; 8];
        v.extend([20; 8]);
        assert!(first_change(&weekly(&v), 2, -50.0).is_some());
        // not enough history for two windows
        assert_eq!(first_change(&weekly(&[1, 100, 100]), 2, 10.0), None);
    }

    #[test]
    fn missing_data_yields_no_alert() {
        let s = reference_snapshot(fixtures::DEFAULT_SEED);
        let mut w = watch("medicaid", AlertRule::ThresholdCross { value: 50 });
        w.entries[0].geo = "US-WY".into();
        assert!(evaluate_alerts(&s, &w).is_empty());
        let w = watch(
            "medicaid",
            AlertRule::PercentChangeOver {
                window_weeks: 500,
                threshold_percent: 1.0,
            },
        );
        assert!(evaluate_alerts(&s, &w).is_empty());
    }
}

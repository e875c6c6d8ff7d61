//! Dated series types shared by ingestion, analytics and lead-lag analysis.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Days, Months, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("dates must be strictly increasing ({prev} then {next})")]
    NonMonotonicDates { prev: NaiveDate, next: NaiveDate },
    #[error("RSV value {0} outside 0..=100")]
    RsvOutOfRange(i64),
    #[error("value {value} on {date} is negative")]
    NegativeValue { date: NaiveDate, value: f64 },
    #[error("value on {0} is not finite")]
    NonFinite(NaiveDate),
    #[error("series is normalized over its window but its maximum is {0}, not 100")]
    NotNormalized(u8),
    #[error("indicator granularity must be weekly or monthly")]
    UnsupportedGranularity,
    #[error("invalid date window: {0}")]
    BadWindow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Daily,
    Weekly,
    Monthly,
    #[serde(rename = "window")]
    WindowAggregate,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Daily => "daily",
            Granularity::Weekly => "weekly",
            Granularity::Monthly => "monthly",
            Granularity::WindowAggregate => "window",
        }
    }

    /// Integer period index of `date`; consecutive periods differ by one.
    ///
    /// Weeks run Sunday..Saturday, so a Sunday bucket start and the Saturday
    /// "week ending" date of the same week share a key.
    pub fn period_key(self, date: NaiveDate) -> Option<i64> {
        const SUNDAY_EPOCH_OFFSET: i64 = 719_166; // 1970-01-04 as days from CE
        let days = i64::from(date.num_days_from_ce()) - SUNDAY_EPOCH_OFFSET;
        match self {
            Granularity::Daily => Some(days),
            Granularity::Weekly => Some(days.div_euclid(7)),
            Granularity::Monthly => Some(i64::from(date.year()) * 12 + i64::from(date.month0())),
            Granularity::WindowAggregate => None,
        }
    }

    /// Ordering from coarse to fine, used to pick the most detailed series.
    pub fn fineness(self) -> u8 {
        match self {
            Granularity::WindowAggregate => 0,
            Granularity::Monthly => 1,
            Granularity::Weekly => 2,
            Granularity::Daily => 3,
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "daily" | "day" => Ok(Granularity::Daily),
            "weekly" | "week" => Ok(Granularity::Weekly),
            "monthly" | "month" => Ok(Granularity::Monthly),
            "window" | "windowaggregate" => Ok(Granularity::WindowAggregate),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}

/// Inclusive calendar date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateWindow {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl DateWindow {
    pub fn new(from: NaiveDate, to: NaiveDate) -> Result<Self, SeriesError> {
        if to < from {
            return Err(SeriesError::BadWindow(format!("{to} is before {from}")));
        }
        Ok(Self { from, to })
    }

    pub fn month(year: i32, month: u32) -> Result<Self, SeriesError> {
        let from = NaiveDate::from_ymd_opt(year, month, 1)
            .ok_or_else(|| SeriesError::BadWindow(format!("{year}-{month:02}")))?;
        let to = from + Months::new(1) - Days::new(1);
        Ok(Self { from, to })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.from <= date && date <= self.to
    }

    pub fn days(&self) -> i64 {
        (self.to - self.from).num_days() + 1
    }
}

impl fmt::Display for DateWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.from, self.to)
    }
}

/// Accepts `YYYY-MM` (whole month), `YYYY-MM-DD` (single day) or
/// `YYYY-MM-DD..YYYY-MM-DD`.
impl FromStr for DateWindow {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || SeriesError::BadWindow(s.to_string());
        if let Some((a, b)) = s.split_once("..") {
            let from = NaiveDate::parse_from_str(a.trim(), "%Y-%m-%d").map_err(|_| bad())?;
            let to = NaiveDate::parse_from_str(b.trim(), "%Y-%m-%d").map_err(|_| bad())?;
            return DateWindow::new(from, to);
        }
        if let Ok(day) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return DateWindow::new(day, day);
        }
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        DateWindow::month(year, month).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RsvPoint {
    pub date: NaiveDate,
    pub value: u8,
}

impl RsvPoint {
    pub fn new(date: NaiveDate, value: i64) -> Result<Self, SeriesError> {
        if !(0..=100).contains(&value) {
            return Err(SeriesError::RsvOutOfRange(value));
        }
        Ok(Self {
            date,
            value: value as u8,
        })
    }
}

/// RSV series for one (query, geography, granularity).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsvSeries {
    pub query_id: String,
    pub geo: String,
    pub granularity: Granularity,
    points: Vec<RsvPoint>,
    /// When the series was pulled from its source, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved_at: Option<DateTime<Utc>>,
}

impl RsvSeries {
    pub fn new(
        query_id: impl Into<String>,
        geo: impl Into<String>,
        granularity: Granularity,
        points: Vec<RsvPoint>,
    ) -> Result<Self, SeriesError> {
        check_increasing(points.iter().map(|p| p.date))?;
        if let Some(p) = points.iter().find(|p| p.value > 100) {
            return Err(SeriesError::RsvOutOfRange(i64::from(p.value)));
        }
        Ok(Self {
            query_id: query_id.into(),
            geo: geo.into(),
            granularity,
            points,
            retrieved_at: None,
        })
    }

    pub fn with_retrieved_at(mut self, at: DateTime<Utc>) -> Self {
        self.retrieved_at = Some(at);
        self
    }

    pub fn points(&self) -> &[RsvPoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn max_value(&self) -> Option<u8> {
        self.points.iter().map(|p| p.value).max()
    }

    /// Checks the window-normalization invariant: max is 100 unless all zero.
    pub fn check_normalized(&self) -> Result<(), SeriesError> {
        match self.max_value() {
            None | Some(0) | Some(100) => Ok(()),
            Some(m) => Err(SeriesError::NotNormalized(m)),
        }
    }

    pub fn values_in(&self, window: &DateWindow) -> impl Iterator<Item = f64> + '_ {
        let w = *window;
        self.points
            .iter()
            .filter(move |p| w.contains(p.date))
            .map(|p| f64::from(p.value))
    }

    pub fn slice(&self, window: &DateWindow) -> RsvSeries {
        RsvSeries {
            points: self
                .points
                .iter()
                .filter(|p| window.contains(p.date))
                .copied()
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_values(&self) -> ValueSeries {
        ValueSeries {
            granularity: self.granularity,
            points: self
                .points
                .iter()
                .map(|p| (p.date, f64::from(p.value)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorPoint {
    pub date: NaiveDate,
    pub value: f64,
}

/// External real-world series in native units (claims, applications, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub name: String,
    pub granularity: Granularity,
    points: Vec<IndicatorPoint>,
}

impl IndicatorSeries {
    pub fn new(
        name: impl Into<String>,
        granularity: Granularity,
        points: Vec<IndicatorPoint>,
    ) -> Result<Self, SeriesError> {
        if !matches!(granularity, Granularity::Weekly | Granularity::Monthly) {
            return Err(SeriesError::UnsupportedGranularity);
        }
        check_increasing(points.iter().map(|p| p.date))?;
        for p in &points {
            if !p.value.is_finite() {
                return Err(SeriesError::NonFinite(p.date));
            }
            if p.value < 0.0 {
                return Err(SeriesError::NegativeValue {
                    date: p.date,
                    value: p.value,
                });
            }
        }
        Ok(Self {
            name: name.into(),
            granularity,
            points,
        })
    }

    pub fn points(&self) -> &[IndicatorPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_values(&self) -> ValueSeries {
        ValueSeries {
            granularity: self.granularity,
            points: self.points.iter().map(|p| (p.date, p.value)).collect(),
        }
    }
}

/// Plain dated real-valued series, the common currency of lead-lag analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSeries {
    pub granularity: Granularity,
    pub points: Vec<(NaiveDate, f64)>,
}

impl ValueSeries {
    pub fn new(granularity: Granularity, points: Vec<(NaiveDate, f64)>) -> Result<Self, SeriesError> {
        check_increasing(points.iter().map(|p| p.0))?;
        Ok(Self {
            granularity,
            points,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn with_values(&self, values: Vec<f64>) -> ValueSeries {
        debug_assert_eq!(values.len(), self.points.len());
        ValueSeries {
            granularity: self.granularity,
            points: self
                .points
                .iter()
                .zip(values)
                .map(|(p, v)| (p.0, v))
                .collect(),
        }
    }

    /// Calendar-month means of the points, keyed by the first of the month.
    pub fn monthly_means(&self) -> ValueSeries {
        let mut out: Vec<(NaiveDate, f64, usize)> = Vec::new();
        for &(date, v) in &self.points {
            let month = NaiveDate::from_ymd_opt(date.year(), date.month(), 1).expect("valid month");
            match out.last_mut() {
                Some(last) if last.0 == month => {
                    last.1 += v;
                    last.2 += 1;
                }
                _ => out.push((month, v, 1)),
            }
        }
        ValueSeries {
            granularity: Granularity::Monthly,
            points: out.into_iter().map(|(d, s, n)| (d, s / n as f64)).collect(),
        }
    }
}

fn check_increasing(dates: impl Iterator<Item = NaiveDate>) -> Result<(), SeriesError> {
    let mut prev: Option<NaiveDate> = None;
    for d in dates {
        if let Some(p) = prev {
            if d <= p {
                return Err(SeriesError::NonMonotonicDates { prev: p, next: d });
            }
        }
        prev = Some(d);
    }
    Ok(())
}

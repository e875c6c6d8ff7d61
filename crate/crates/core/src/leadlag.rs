//! Query-versus-indicator comparison: 0-100 normalization, classical
//! additive seasonal adjustment, lagged correlation, best-lag search, and
//! lead time of a search signal against policy events.

use std::collections::{BTreeMap, HashMap};
use std::ops::RangeInclusive;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{DateWindow, Granularity, RsvSeries, ValueSeries};
use crate::stats::pearson;

const BUNDLED_EVENTS: &str = include_str!("../data/events.csv");

/// Default RSV level a signal must reach to count as "already popular".
pub const DEFAULT_LEAD_THRESHOLD: u8 = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LeadLagError {
    #[error("series has {0} points; at least 2 are required")]
    TooShort(usize),
    #[error("insufficient seasonal baseline: {0}")]
    InsufficientBaseline(String),
    #[error("only {n} overlapping points at lag {lag}; at least 3 are required")]
    InsufficientOverlap { lag: i64, n: usize },
    #[error("a series is constant over the overlap at lag {lag}")]
    ConstantSeries { lag: i64 },
    #[error("no lag in {from}..={to} has a valid correlation")]
    NoValidLag { from: i64, to: i64 },
    #[error("granularities differ ({0} vs {1})")]
    GranularityMismatch(Granularity, Granularity),
    #[error("{0} series cannot be lag-aligned")]
    UnalignableGranularity(Granularity),
    #[error("signal series is empty")]
    EmptySeries,
    #[error("signal ends on {last}, before the event on {event}")]
    InsufficientCoverage { last: NaiveDate, event: NaiveDate },
    #[error("events file: {0}")]
    EventsFile(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    /// The input was constant and mapped to all zeros.
    pub constant: bool,
}

/// Min-max maps values onto `[0, 100]`.
pub fn normalize_0_to_100(values: &[f64]) -> Result<Normalized, LeadLagError> {
    if values.len() < 2 {
        return Err(LeadLagError::TooShort(values.len()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(Normalized {
            values: vec![0.0; values.len()],
            constant: true,
        });
    }
    let span = max - min;
    Ok(Normalized {
        values: values.iter().map(|v| (v - min) * 100.0 / span).collect(),
        constant: false,
    })
}

/// Weekly points are indexed by the ISO week of the Wednesday inside their
/// Sunday..Saturday week, so Sunday bucket starts and Saturday week-ending
/// dates agree.
fn season_index(granularity: Granularity, date: NaiveDate) -> Result<u32, LeadLagError> {
    match granularity {
        Granularity::Weekly => {
            let back = u64::from(date.weekday().num_days_from_sunday());
            let wednesday = date - Days::new(back) + Days::new(3);
            Ok(wednesday.iso_week().week())
        }
        Granularity::Monthly => Ok(date.month()),
        other => Err(LeadLagError::InsufficientBaseline(format!(
            "{other} series have no seasonal index"
        ))),
    }
}

/// Classical additive adjustment against a baseline of complete prior years.
///
/// For each season index (ISO week-of-year for weekly series, month for
/// monthly series) the baseline mean of that index minus the baseline grand
/// mean is subtracted from every point carrying the index. Evaluation points
/// whose index never occurs in the baseline are an error.
pub fn seasonal_adjust(series: &ValueSeries, baseline: &DateWindow) -> Result<ValueSeries, LeadLagError> {
    if baseline.days() < 365 {
        return Err(LeadLagError::InsufficientBaseline(format!(
            "baseline {baseline} is shorter than one year"
        )));
    }
    let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    let mut grand = (0.0, 0usize);
    for &(date, v) in &series.points {
        if baseline.contains(date) {
            let idx = season_index(series.granularity, date)?;
            let e = sums.entry(idx).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
            grand.0 += v;
            grand.1 += 1;
        }
    }
    if grand.1 == 0 {
        return Err(LeadLagError::InsufficientBaseline(format!(
            "no points inside baseline {baseline}"
        )));
    }
    let grand_mean = grand.0 / grand.1 as f64;
    let effects: BTreeMap<u32, f64> = sums
        .into_iter()
        .map(|(idx, (s, n))| (idx, s / n as f64 - grand_mean))
        .collect();
    let points = series
        .points
        .iter()
        .map(|&(date, v)| {
            let idx = season_index(series.granularity, date)?;
            // ISO week 53 falls back to week 52 when the baseline has none
            let effect = effects
                .get(&idx)
                .or_else(|| if idx == 53 { effects.get(&52) } else { None })
                .ok_or_else(|| {
                LeadLagError::InsufficientBaseline(format!("season index {idx} ({date}) absent from baseline"))
            })?;
            Ok((date, v - effect))
        })
        .collect::<Result<Vec<_>, LeadLagError>>()?;
    Ok(ValueSeries {
        granularity: series.granularity,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagCorrResult {
    /// Periods by which the query is shifted forward; positive means the
    /// search signal leads the indicator.
    pub lag: i64,
    pub r: f64,
    pub n: usize,
}

fn period_keys(series: &ValueSeries) -> Result<Vec<i64>, LeadLagError> {
    series
        .points
        .iter()
        .map(|(d, _)| {
            series
                .granularity
                .period_key(*d)
                .ok_or(LeadLagError::UnalignableGranularity(series.granularity))
        })
        .collect()
}

/// Pearson correlation of `query(t)` against `indicator(t + lag)`.
pub fn lagged_correlation(query: &ValueSeries, indicator: &ValueSeries, lag: i64) -> Result<LagCorrResult, LeadLagError> {
    if query.granularity != indicator.granularity {
        return Err(LeadLagError::GranularityMismatch(query.granularity, indicator.granularity));
    }
    let ind: HashMap<i64, f64> = period_keys(indicator)?
        .into_iter()
        .zip(indicator.points.iter().map(|p| p.1))
        .collect();
    let pairs: Vec<(f64, f64)> = period_keys(query)?
        .into_iter()
        .zip(query.points.iter().map(|p| p.1))
        .filter_map(|(k, q)| ind.get(&(k + lag)).map(|&y| (q, y)))
        .collect();
    if pairs.len() < 3 {
        return Err(LeadLagError::InsufficientOverlap { lag, n: pairs.len() });
    }
    let r = pearson(&pairs).ok_or(LeadLagError::ConstantSeries { lag })?;
    Ok(LagCorrResult { lag, r, n: pairs.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagObjective {
    /// Maximize signed r (positive-association nowcasts).
    #[default]
    Signed,
    /// Maximize |r| (exploratory).
    Absolute,
}

impl std::str::FromStr for LagObjective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "signed" => Ok(LagObjective::Signed),
            "absolute" => Ok(LagObjective::Absolute),
            other => Err(format!("unknown lag objective {other:?}; expected signed or absolute")),
        }
    }
}

/// Every lag in the range with a valid correlation, in lag order.
pub fn lag_profile(query: &ValueSeries, indicator: &ValueSeries, lags: RangeInclusive<i64>) -> Vec<LagCorrResult> {
    lags.filter_map(|lag| lagged_correlation(query, indicator, lag).ok())
        .collect()
}

/// The lag maximizing the objective; ties go to the smallest non-negative
/// lag, then to the smallest |lag|.
pub fn best_lag(
    query: &ValueSeries,
    indicator: &ValueSeries,
    lags: RangeInclusive<i64>,
    objective: LagObjective,
) -> Result<LagCorrResult, LeadLagError> {
    let (from, to) = (*lags.start(), *lags.end());
    let score = |r: &LagCorrResult| match objective {
        LagObjective::Signed => r.r,
        LagObjective::Absolute => r.r.abs(),
    };
    let preference = |lag: i64| if lag >= 0 { (0, lag) } else { (1, -lag) };
    lag_profile(query, indicator, lags)
        .into_iter()
        .reduce(|best, cand| {
            let (sb, sc) = (score(&best), score(&cand));
            if sc > sb || (sc == sb && preference(cand.lag) < preference(best.lag)) {
                cand
            } else {
                best
            }
        })
        .ok_or(LeadLagError::NoValidLag { from, to })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicyEvent {
    pub name: String,
    pub date: NaiveDate,
}

impl PolicyEvent {
    pub fn new(name: impl Into<String>, date: NaiveDate) -> Self {
        Self {
            name: name.into(),
            date,
        }
    }

    /// The four bundled 2020 federal events.
    pub fn bundled() -> &'static [PolicyEvent] {
        static EVENTS: OnceLock<Vec<PolicyEvent>> = OnceLock::new();
        EVENTS.get_or_init(|| parse_events(BUNDLED_EVENTS).expect("bundled events are valid"))
    }

    pub fn load(path: Option<&Path>) -> Result<Vec<PolicyEvent>, LeadLagError> {
        match path {
            None => Ok(Self::bundled().to_vec()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| LeadLagError::EventsFile(e.to_string()))?;
                parse_events(&text)
            }
        }
    }
}

/// Parses a `name,date` events file.
pub fn parse_events(text: &str) -> Result<Vec<PolicyEvent>, LeadLagError> {
    #[derive(Deserialize)]
    struct Row {
        name: String,
        date: NaiveDate,
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| LeadLagError::EventsFile(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["name", "date"] {
        return Err(LeadLagError::EventsFile("expected header `name,date`".into()));
    }
    reader
        .deserialize::<Row>()
        .map(|row| {
            row.map(|r| PolicyEvent::new(r.name, r.date))
                .map_err(|e| LeadLagError::EventsFile(e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LeadTime {
    /// `days = event - crossing`; positive when the signal came first.
    Lead { days: i64, crossing: NaiveDate },
    NoCrossing,
}

impl LeadTime {
    pub fn days(&self) -> Option<i64> {
        match self {
            LeadTime::Lead { days, .. } => Some(*days),
            LeadTime::NoCrossing => None,
        }
    }
}

/// First date the signal reaches `threshold`, measured against the event.
pub fn lead_time(signal: &RsvSeries, threshold: u8, event: &PolicyEvent) -> Result<LeadTime, LeadLagError> {
    let last = signal.points().last().ok_or(LeadLagError::EmptySeries)?;
    if last.date < event.date {
        return Err(LeadLagError::InsufficientCoverage {
            last: last.date,
            event: event.date,
        });
    }
    Ok(match first_crossing(signal, threshold) {
        Some(crossing) => LeadTime::Lead {
            days: (event.date - crossing).num_days(),
            crossing,
        },
        None => LeadTime::NoCrossing,
    })
}

pub fn first_crossing(signal: &RsvSeries, threshold: u8) -> Option<NaiveDate> {
    signal.points().iter().find(|p| p.value >= threshold).map(|p| p.date)
}

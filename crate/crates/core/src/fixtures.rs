//! Seeded reference fixture snapshots with planted ground truth.
//!
//! Every series is built from non-negative search shares and passed through
//! [`quantize_shares`], so fixtures exercise the same RSV normalization as
//! real pulls. The planted structure (percent changes, crossings, the state
//! typology, indicator lags) holds for every seed; the seed only moves the
//! background noise.

use std::collections::HashMap;

use chrono::{DateTime, Datelike, Days, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::catalog::{Catalog, INCOMPLETE_STATE_QUERIES};
use crate::geo::{self, Region};
use crate::ingest;
use crate::panel::StatePanel;
use crate::rsv::quantize_shares;
use crate::series::{DateWindow, Granularity, IndicatorSeries, RsvPoint, RsvSeries};
use crate::snapshot::Snapshot;

pub const DEFAULT_SEED: u64 = 20_200_415;
pub const NATIONAL_WEEKS: u64 = 224;

/// Jan 2020 mean is 100 for each; the value is the planted Mar 2020 mean.
pub const PLANTED_DECLINES: [(&str, u8); 3] = [("health-insurance", 82), ("medicaid", 77), ("medicare", 74)];
/// Jan 2020 mean 0.5, Mar 2020 mean 75: a 150-fold rise.
pub const CAPPED_QUERY: &str = "social-distancing";
/// Exactly zero throughout Jan 2020.
pub const ZERO_BASELINE_QUERY: &str = "how-to-make-coronavirus-mask";

pub const TYPOLOGY_POSITIVE: [&str; 2] = ["stimulus-check", "disability-benefits"];
pub const TYPOLOGY_NEGATIVE: [&str; 3] = ["social-distancing", "coronavirus-cnn", "coronavirus-washington-post"];
/// Highest first.
pub const TYPOLOGY_TOP_STATES: [&str; 5] = ["US-MS", "US-LA", "US-AL", "US-AR", "US-KY"];

pub const UNEMPLOYMENT_QUERY: &str = "unemployment-benefits";
pub const UNEMPLOYMENT_LEAD_WEEKS: i64 = 1;
pub const MEDICAID_QUERY: &str = "medicaid";
pub const MEDICAID_LEAD_MONTHS: i64 = 1;

/// Queries that also get a state-level weekly pull.
pub const STATE_WEEKLY_QUERIES: [&str; 3] = ["stimulus-check", "unemployment-benefits", "social-distancing"];

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid fixture date")
}

/// First Sunday bucket of the national series.
pub fn national_start() -> NaiveDate {
    date(2016, 1, 3)
}

/// The Mar 1 – Apr 15, 2020 window of the state panel and the daily pulls.
pub fn state_window() -> DateWindow {
    DateWindow::new(date(2020, 3, 1), date(2020, 4, 15)).expect("ordered window")
}

/// Daily national series cross RSV 50 on these dates.
pub fn planted_crossings() -> [(&'static str, NaiveDate); 2] {
    [(CAPPED_QUERY, date(2020, 3, 8)), (ZERO_BASELINE_QUERY, date(2020, 3, 23))]
}

pub fn created_at() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 4, 16, 0, 0, 0).single().expect("valid timestamp")
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn is_new_topic(id: &str) -> bool {
    id.contains("coronavirus") || matches!(id, "chinese-virus" | "paycheck-protection-program")
}

fn to_series(query_id: &str, geo: &str, granularity: Granularity, dates: &[NaiveDate], levels: &[f64]) -> RsvSeries {
    let points = dates
        .iter()
        .zip(quantize_shares(levels))
        .map(|(&d, v)| RsvPoint::new(d, i64::from(v)).expect("quantized value in range"))
        .collect();
    RsvSeries::new(query_id, geo, granularity, points).expect("fixture dates increase")
}

fn weekly_dates(start: NaiveDate, weeks: u64) -> Vec<NaiveDate> {
    (0..weeks).map(|i| start + Days::new(7 * i)).collect()
}

fn in_month(d: NaiveDate, year: i32, month: u32) -> bool {
    d.year() == year && d.month() == month
}

/// Seasonal base with AR(1) noise, kept within `[0.05, ceiling]`.
fn background(rng: &mut ChaCha8Rng, dates: &[NaiveDate], ceiling: f64) -> Vec<f64> {
    let base = rng.random_range(0.3..0.6);
    let amp = rng.random_range(0.0..0.08);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let mut e = 0.0;
    dates
        .iter()
        .map(|d| {
            e = 0.7 * e + 0.03 * gauss(rng);
            let season = amp * (std::f64::consts::TAU * f64::from(d.ordinal()) / 365.25 + phase).sin();
            (base + season + e).clamp(0.05, ceiling)
        })
        .collect()
}

fn national_levels(
    id: &str,
    dates: &[NaiveDate],
    claims: &HashMap<i64, f64>,
    applications: &HashMap<i64, f64>,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mar_2020 = date(2020, 3, 1);
    if let Some(&(_, target)) = PLANTED_DECLINES.iter().find(|(q, _)| *q == id) {
        let mut levels = if id == MEDICAID_QUERY {
            medicaid_levels(dates, applications, rng)
        } else {
            background(rng, dates, 0.9)
        };
        for (l, d) in levels.iter_mut().zip(dates) {
            if in_month(*d, 2020, 1) {
                *l = 1.0;
            } else if in_month(*d, 2020, 3) {
                *l = f64::from(target) / 100.0;
            } else if *d >= mar_2020 {
                *l = (f64::from(target) / 100.0 * rng.random_range(0.95..1.05)).min(0.9);
            }
        }
        return levels;
    }
    if id == CAPPED_QUERY {
        return dates
            .iter()
            .map(|d| {
                let planted = match (d.year(), d.month(), d.day()) {
                    (2020, 1, 5 | 12) => Some(0.0),
                    (2020, 1, 19 | 26) => Some(0.01),
                    (2020, 3, 1) => Some(0.5),
                    (2020, 3, 8) => Some(0.7),
                    (2020, 3, 15) => Some(0.8),
                    (2020, 3, 22) => Some(0.75),
                    (2020, 3, 29) => Some(1.0),
                    (2020, 4, 5) => Some(0.9),
                    (2020, 4, 12) => Some(0.85),
                    _ => None,
                };
                match planted {
                    Some(l) => l,
                    None if d.year() == 2020 => f64::from(rng.random_range(1..=5_u8)) / 100.0,
                    None => f64::from(u8::from(rng.random_bool(0.1))) / 100.0,
                }
            })
            .collect();
    }
    if id == UNEMPLOYMENT_QUERY {
        let key = |d: NaiveDate| Granularity::Weekly.period_key(d).expect("weekly key");
        let last = claims.keys().max().copied().unwrap_or_default();
        return dates
            .iter()
            .map(|&d| {
                let target = key(d) + UNEMPLOYMENT_LEAD_WEEKS;
                let c = claims.get(&target).or_else(|| claims.get(&last)).copied().unwrap_or(0.0);
                c * (1.0 + 0.03 * gauss(rng)).max(0.5)
            })
            .collect();
    }
    if id == ZERO_BASELINE_QUERY || is_new_topic(id) {
        let start = if id == ZERO_BASELINE_QUERY { date(2020, 2, 23) } else { date(2020, 1, 19) };
        let peak = rng.random_range(0.6..1.0);
        return dates
            .iter()
            .map(|&d| {
                if d < start {
                    0.0
                } else if d < mar_2020 {
                    rng.random_range(0.005..0.03)
                } else {
                    let weeks = (d - mar_2020).num_days() as f64 / 7.0;
                    peak * (1.0 - 0.08 * weeks) * rng.random_range(0.9..1.1)
                }
            })
            .collect();
    }
    // everything else: background with a pandemic-era shift up or down
    let shift = rng.random_range(0.5..2.0);
    background(rng, dates, 1.0)
        .into_iter()
        .zip(dates)
        .map(|(l, d)| if *d >= date(2020, 3, 8) { l * shift } else { l })
        .collect()
}

/// Weekly shares whose monthly means track next month's applications.
fn medicaid_levels(dates: &[NaiveDate], applications: &HashMap<i64, f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let max = applications.values().copied().fold(0.0, f64::max);
    let mean = applications.values().sum::<f64>() / applications.len().max(1) as f64;
    dates
        .iter()
        .map(|&d| {
            let key = Granularity::Monthly.period_key(d).expect("monthly key") + MEDICAID_LEAD_MONTHS;
            match applications.get(&key) {
                Some(a) => 0.85 * a / max * (1.0 + 0.01 * gauss(rng)),
                None => 0.85 * mean / max * (1.0 + 0.04 * gauss(rng)),
            }
            .min(0.9)
        })
        .collect()
}

fn indicator_map(series: &IndicatorSeries) -> HashMap<i64, f64> {
    series
        .points()
        .iter()
        .filter_map(|p| series.granularity.period_key(p.date).map(|k| (k, p.value)))
        .collect()
}

fn national_series(catalog: &Catalog, indicators: &[IndicatorSeries], rng: &mut ChaCha8Rng) -> Vec<RsvSeries> {
    let dates = weekly_dates(national_start(), NATIONAL_WEEKS);
    let claims = indicators.first().map(indicator_map).unwrap_or_default();
    let applications = indicators.get(1).map(indicator_map).unwrap_or_default();
    catalog
        .queries
        .iter()
        .map(|q| {
            let levels = national_levels(&q.id, &dates, &claims, &applications, rng);
            to_series(&q.id, geo::NATIONAL, Granularity::Weekly, &dates, &levels)
        })
        .collect()
}

/// Daily Mar 1 – Apr 15 levels: below 50 before `cross`, at least 50 on it,
/// peaking at 100 on `peak`.
fn daily_levels(rng: &mut ChaCha8Rng, days: &[NaiveDate], cross: NaiveDate, peak: NaiveDate) -> Vec<f64> {
    let before = (cross - days[0]).num_days() as f64;
    let rise = (peak - cross).num_days() as f64;
    days.iter()
        .map(|&d| {
            let t = (d - days[0]).num_days() as f64;
            if d < cross {
                2.0 + 40.0 * t / before + rng.random_range(0.0..3.0)
            } else if d == cross {
                rng.random_range(52.0..58.0)
            } else if d < peak {
                60.0 + 35.0 * (t - before) / rise + rng.random_range(0.0..3.0)
            } else if d == peak {
                100.0
            } else {
                rng.random_range(65.0..95.0)
            }
        })
        .map(|l| l / 100.0)
        .collect()
}

fn daily_series(rng: &mut ChaCha8Rng) -> Vec<RsvSeries> {
    let window = state_window();
    let days: Vec<NaiveDate> = window.from.iter_days().take_while(|d| *d <= window.to).collect();
    let peaks = [date(2020, 3, 16), date(2020, 4, 4)];
    planted_crossings()
        .iter()
        .zip(peaks)
        .map(|(&(query, cross), peak)| {
            let levels = daily_levels(rng, &days, cross, peak);
            to_series(query, geo::NATIONAL, Granularity::Daily, &days, &levels)
        })
        .collect()
}

/// Latent per-state factor of the planted typology, standardized.
fn typology_factor(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let planted = [4.0, 3.4, 2.8, 2.2, 1.6];
    let raw: Vec<f64> = geo::STATES
        .iter()
        .map(|g| match TYPOLOGY_TOP_STATES.iter().position(|s| *s == g.state) {
            Some(rank) => planted[rank],
            None if g.region == Region::South => rng.random_range(0.2..0.8),
            None => rng.random_range(-0.8..0.0),
        })
        .collect();
    let (mean, sd) = mean_sd(&raw);
    raw.iter().map(|v| (v - mean) / sd).collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Gaussian vector with the mean and the `f` direction projected out.
fn orthogonal_noise(rng: &mut ChaCha8Rng, f: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = f.iter().map(|_| gauss(rng)).collect();
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    g.iter_mut().for_each(|x| *x -= mean);
    // f is centred, so removing its component keeps g centred
    let coef = crate::linalg::dot(&g, f) / crate::linalg::dot(f, f);
    g.iter_mut().zip(f).for_each(|(x, fi)| *x -= coef * fi);
    let (_, sd) = mean_sd(&g);
    g.iter().map(|x| x / sd).collect()
}

/// Incomplete queries lose states drawn from this many lowest-volume ones.
const LOW_VOLUME_STATES: usize = 15;

fn state_panel(catalog: &Catalog, rng: &mut ChaCha8Rng) -> StatePanel {
    let f = typology_factor(rng);
    let states: Vec<String> = geo::state_codes().map(String::from).collect();
    let noise_of = |id: &str| -> Option<(f64, f64)> {
        let sign = if TYPOLOGY_POSITIVE.contains(&id) { 1.0 } else { -1.0 };
        let sigma = match id {
            "stimulus-check" => 0.05,
            "disability-benefits" => 0.1,
            "social-distancing" => 0.15,
            _ => 0.2,
        };
        (TYPOLOGY_POSITIVE.contains(&id) || TYPOLOGY_NEGATIVE.contains(&id)).then_some((sign, sigma))
    };
    let columns: Vec<Vec<Option<f64>>> = catalog
        .queries
        .iter()
        .map(|q| {
            let signal: Vec<f64> = match noise_of(&q.id) {
                Some((sign, sigma)) => f.iter().map(|fi| sign * fi + sigma * gauss(rng)).collect(),
                None => orthogonal_noise(rng, &f),
            };
            let levels: Vec<f64> = signal.iter().map(|s| (50.0 + 11.0 * s).max(1.0)).collect();
            let mut column: Vec<Option<f64>> = quantize_shares(&levels).into_iter().map(|v| Some(f64::from(v))).collect();
            if INCOMPLETE_STATE_QUERIES.contains(&q.id.as_str()) {
                // the source withholds low-volume states, never the peak
                let mut order: Vec<usize> = (0..column.len()).collect();
                order.sort_by(|&a, &b| column[a].partial_cmp(&column[b]).expect("finite levels").then(a.cmp(&b)));
                let missing = rng.random_range(1..=5);
                for _ in 0..missing {
                    column[order[rng.random_range(0..LOW_VOLUME_STATES)]] = None;
                }
            }
            column
        })
        .collect();
    let ids = catalog.queries.iter().map(|q| q.id.clone()).collect();
    StatePanel::from_columns(state_window(), states, ids, &columns).expect("fixture panel is well formed")
}

fn state_weekly(rng: &mut ChaCha8Rng) -> Vec<RsvSeries> {
    let dates = weekly_dates(date(2020, 1, 5), 15);
    let onset = date(2020, 3, 8);
    let mut out = Vec::new();
    for query in STATE_WEEKLY_QUERIES {
        for state in geo::state_codes() {
            let amp = rng.random_range(2.0..20.0);
            let levels: Vec<f64> = dates
                .iter()
                .map(|&d| {
                    let base = rng.random_range(0.5..1.5);
                    if d >= onset {
                        base * amp
                    } else {
                        base
                    }
                })
                .collect();
            out.push(to_series(query, state, Granularity::Weekly, &dates, &levels));
        }
    }
    out
}

/// The full reference snapshot for `seed`, using the bundled catalog and
/// indicator files.
pub fn reference_snapshot(seed: u64) -> Snapshot {
    let catalog = Catalog::bundled();
    let indicators = vec![ingest::bundled_unemployment(), ingest::bundled_medicaid()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut national = national_series(catalog, &indicators, &mut rng);
    national.extend(daily_series(&mut rng));
    let panel = state_panel(catalog, &mut rng);
    let weekly = state_weekly(&mut rng);
    Snapshot::new(created_at(), catalog.version.clone(), national, weekly, panel, indicators)
        .expect("fixture series are unique")
}

//! File-based ingestion: indicator CSVs and RSV fixture CSVs.
//!
//! Formats (UTF-8, header row required):
//! - RSV series: `query_id,geo,granularity,date,value`. For `window` rows the
//!   `date` column holds the aggregation window as `from..to` and an empty
//!   `value` marks a missing state.
//! - Unemployment claims: `week_ending,initial_claims`.
//! - Medicaid applications: `month,new_applications` (`YYYY-MM`).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::geo;
use crate::panel::{PanelError, StatePanel};
use crate::snapshot::Snapshot;
use crate::series::{
    DateWindow, Granularity, IndicatorPoint, IndicatorSeries, RsvPoint, RsvSeries, SeriesError,
};

pub const BUNDLED_UNEMPLOYMENT_CSV: &str = include_str!("../data/dol_initial_claims.csv");
pub const BUNDLED_MEDICAID_CSV: &str = include_str!("../data/medicaid_applications.csv");

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("dates are not strictly increasing: {0} appears more than once")]
    NonMonotonicDates(NaiveDate),
    #[error("negative value {value} on {date}")]
    NegativeValue { date: NaiveDate, value: f64 },
    #[error("line {line}: {message}")]
    BadRow { line: u64, message: String },
    #[error("unknown query id `{0}`")]
    UnknownQuery(String),
    #[error("unknown geography `{0}`")]
    UnknownGeography(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error("expected exactly one state window panel, found {0}")]
    PanelCount(usize),
    #[error(transparent)]
    Snapshot(#[from] crate::snapshot::SnapshotError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorSchema {
    UnemploymentWeekly,
    MedicaidMonthly,
}

impl IndicatorSchema {
    fn header(self) -> [&'static str; 2] {
        match self {
            IndicatorSchema::UnemploymentWeekly => ["week_ending", "initial_claims"],
            IndicatorSchema::MedicaidMonthly => ["month", "new_applications"],
        }
    }

    pub fn series_name(self) -> &'static str {
        match self {
            IndicatorSchema::UnemploymentWeekly => "unemployment_claims",
            IndicatorSchema::MedicaidMonthly => "medicaid_applications",
        }
    }

    pub fn granularity(self) -> Granularity {
        match self {
            IndicatorSchema::UnemploymentWeekly => Granularity::Weekly,
            IndicatorSchema::MedicaidMonthly => Granularity::Monthly,
        }
    }

    fn parse_date(self, s: &str) -> Option<NaiveDate> {
        match self {
            IndicatorSchema::UnemploymentWeekly => NaiveDate::parse_from_str(s, "%Y-%m-%d").ok(),
            IndicatorSchema::MedicaidMonthly => NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d")
                .or_else(|_| NaiveDate::parse_from_str(s, "%Y-%m-%d"))
                .ok(),
        }
    }
}

pub fn load_indicator_csv(path: &Path, schema: IndicatorSchema) -> Result<IndicatorSeries, IngestError> {
    read_indicator_csv(std::fs::File::open(path)?, schema)
}

/// Reads an indicator file; rows may come in any order and are sorted.
pub fn read_indicator_csv(reader: impl Read, schema: IndicatorSchema) -> Result<IndicatorSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != schema.header() {
        return Err(IngestError::SchemaMismatch(format!(
            "expected header `{}`, found `{}`",
            schema.header().join(","),
            header.join(",")
        )));
    }
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(IngestError::SchemaMismatch(format!("line {line}: expected 2 fields")));
        }
        let date = schema
            .parse_date(&record[0])
            .ok_or_else(|| IngestError::SchemaMismatch(format!("line {line}: bad date {:?}", &record[0])))?;
        let value: f64 = record[1]
            .replace(',', "")
            .parse()
            .map_err(|_| IngestError::SchemaMismatch(format!("line {line}: bad value {:?}", &record[1])))?;
        if !value.is_finite() {
            return Err(IngestError::SchemaMismatch(format!("line {line}: non-finite value")));
        }
        if value < 0.0 {
            return Err(IngestError::NegativeValue { date, value });
        }
        points.push(IndicatorPoint { date, value });
    }
    points.sort_by_key(|p| p.date);
    if let Some(w) = points.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(IngestError::NonMonotonicDates(w[0].date));
    }
    Ok(IndicatorSeries::new(schema.series_name(), schema.granularity(), points)?)
}

pub fn bundled_unemployment() -> IndicatorSeries {
    read_indicator_csv(BUNDLED_UNEMPLOYMENT_CSV.as_bytes(), IndicatorSchema::UnemploymentWeekly)
        .expect("bundled unemployment fixture is valid")
}

pub fn bundled_medicaid() -> IndicatorSeries {
    read_indicator_csv(BUNDLED_MEDICAID_CSV.as_bytes(), IndicatorSchema::MedicaidMonthly)
        .expect("bundled medicaid fixture is valid")
}

pub fn write_indicator_csv(series: &IndicatorSeries, schema: IndicatorSchema, out: impl Write) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(schema.header())?;
    for p in series.points() {
        let date = match schema {
            IndicatorSchema::UnemploymentWeekly => p.date.format("%Y-%m-%d").to_string(),
            IndicatorSchema::MedicaidMonthly => p.date.format("%Y-%m").to_string(),
        };
        w.write_record([date, p.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Contents of an RSV fixture file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RsvTable {
    pub series: Vec<RsvSeries>,
    pub panels: Vec<StatePanel>,
}

const RSV_HEADER: [&str; 5] = ["query_id", "geo", "granularity", "date", "value"];

/// Reads an RSV fixture file. Query ids must exist in `catalog`; panel
/// columns follow catalog order and panel rows follow state-code order.
pub fn read_rsv_csv(reader: impl Read, catalog: &Catalog) -> Result<RsvTable, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != RSV_HEADER {
        return Err(IngestError::SchemaMismatch(format!(
            "expected header `{}`",
            RSV_HEADER.join(",")
        )));
    }
    type SeriesKey = (String, String, Granularity);
    let mut series: BTreeMap<SeriesKey, Vec<RsvPoint>> = BTreeMap::new();
    let mut windows: Vec<(DateWindow, BTreeMap<(String, String), Option<f64>>)> = Vec::new();

    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |message: String| IngestError::BadRow { line, message };
        if record.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", record.len())));
        }
        let query_id = record[0].to_string();
        if catalog.get(&query_id).is_none() {
            return Err(IngestError::UnknownQuery(query_id));
        }
        let geo_code = record[1].to_string();
        if !geo::is_valid_geo(&geo_code) {
            return Err(IngestError::UnknownGeography(geo_code));
        }
        let granularity: Granularity = record[2].parse().map_err(bad)?;
        let value: Option<i64> = match &record[4] {
            "" => None,
            v => Some(v.parse().map_err(|_| bad(format!("bad value {v:?}")))?),
        };
        if granularity == Granularity::WindowAggregate {
            let window: DateWindow = record[3].parse().map_err(|e: SeriesError| bad(e.to_string()))?;
            if let Some(v) = value {
                if !(0..=100).contains(&v) {
                    return Err(SeriesError::RsvOutOfRange(v).into());
                }
            }
            let idx = match windows.iter().position(|(w, _)| *w == window) {
                Some(i) => i,
                None => {
                    windows.push((window, BTreeMap::new()));
                    windows.len() - 1
                }
            };
            if windows[idx].1.insert((geo_code.clone(), query_id.clone()), value.map(|v| v as f64)).is_some() {
                return Err(bad(format!("duplicate window cell ({geo_code}, {query_id})")));
            }
        } else {
            let date = NaiveDate::parse_from_str(&record[3], "%Y-%m-%d").map_err(|_| bad(format!("bad date {:?}", &record[3])))?;
            let value = value.ok_or_else(|| bad("time-series rows need a value".into()))?;
            series
                .entry((query_id, geo_code, granularity))
                .or_default()
                .push(RsvPoint::new(date, value)?);
        }
    }

    let series = series
        .into_iter()
        .map(|((q, g, gran), mut pts)| {
            pts.sort_by_key(|p| p.date);
            RsvSeries::new(q, g, gran, pts)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let panels = windows
        .into_iter()
        .map(|(window, cells)| panel_from_cells(window, &cells, catalog))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RsvTable { series, panels })
}

fn panel_from_cells(
    window: DateWindow,
    cells: &BTreeMap<(String, String), Option<f64>>,
    catalog: &Catalog,
) -> Result<StatePanel, IngestError> {
    let mut states: Vec<String> = cells.keys().map(|(s, _)| s.clone()).collect();
    states.dedup();
    let mut queries: Vec<&str> = cells.keys().map(|(_, q)| q.as_str()).collect();
    queries.sort_by_key(|q| catalog.position(q));
    queries.dedup();
    let rows = states
        .iter()
        .map(|s| {
            queries
                .iter()
                .map(|q| cells.get(&(s.clone(), (*q).to_string())).copied().flatten())
                .collect()
        })
        .collect();
    Ok(StatePanel::new(
        window,
        states,
        queries.into_iter().map(String::from).collect(),
        rows,
    )?)
}

pub fn load_rsv_csv(path: &Path, catalog: &Catalog) -> Result<RsvTable, IngestError> {
    read_rsv_csv(std::fs::File::open(path)?, catalog)
}

pub fn write_rsv_csv(table: &RsvTable, out: impl Write) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RSV_HEADER)?;
    for s in &table.series {
        for p in s.points() {
            w.write_record([
                s.query_id.as_str(),
                s.geo.as_str(),
                s.granularity.as_str(),
                &p.date.to_string(),
                &p.value.to_string(),
            ])?;
        }
    }
    for panel in &table.panels {
        let window = panel.window.to_string();
        for (i, state) in panel.states().iter().enumerate() {
            for (j, q) in panel.query_ids().iter().enumerate() {
                let value = panel.get(i, j).map(|v| v.to_string()).unwrap_or_default();
                w.write_record([q.as_str(), state.as_str(), "window", &window, &value])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Assembles a snapshot from a fixture table: national series go to the
/// national set, state series to the state-weekly set, and the table's
/// single window panel becomes the state panel.
pub fn snapshot_from_table(
    table: RsvTable,
    indicators: Vec<IndicatorSeries>,
    catalog: &Catalog,
    created_at: DateTime<Utc>,
) -> Result<Snapshot, IngestError> {
    let RsvTable { series, mut panels } = table;
    if panels.len() != 1 {
        return Err(IngestError::PanelCount(panels.len()));
    }
    let (national, state_weekly) = series.into_iter().partition(|s| s.geo == geo::NATIONAL);
    let panel = panels.pop().expect("one panel");
    Ok(Snapshot::new(
        created_at,
        catalog.version.clone(),
        national,
        state_weekly,
        panel,
        indicators,
    )?)
}

/// The RSV content of a snapshot as a fixture table.
pub fn table_from_snapshot(snapshot: &Snapshot) -> RsvTable {
    RsvTable {
        series: snapshot.all_series().cloned().collect(),
        panels: vec![snapshot.state_window.clone()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_unemployment_fixture() {
        let s = bundled_unemployment();
        assert_eq!(s.len(), 224);
        assert_eq!(s.granularity, Granularity::Weekly);
        assert_eq!(s.points()[0].date, NaiveDate::from_ymd_opt(2016, 1, 2).unwrap());
        assert_eq!(bundled_medicaid().len(), 32);
    }

    #[test]
    fn shuffled_rows_are_sorted() {
        let text = "week_ending,initial_claims\n2020-01-18,5\n2020-01-04,7\n2020-01-11,6\n";
        let s = read_indicator_csv(text.as_bytes(), IndicatorSchema::UnemploymentWeekly).unwrap();
        let dates: Vec<String> = s.points().iter().map(|p| p.date.to_string()).collect();
        assert_eq!(dates, ["2020-01-04", "2020-01-11", "2020-01-18"]);
        assert_eq!(s.points().iter().map(|p| p.value).sum::<f64>(), 18.0);
    }

    #[test]
    fn indicator_errors() {
        let neg = "week_ending,initial_claims\n2020-01-04,-5\n";
        assert!(matches!(
            read_indicator_csv(neg.as_bytes(), IndicatorSchema::UnemploymentWeekly),
            Err(IngestError::NegativeValue { .. })
        ));
        let dup = "month,new_applications\n2020-01,5\n2020-01,6\n";
        assert!(matches!(
            read_indicator_csv(dup.as_bytes(), IndicatorSchema::MedicaidMonthly),
            Err(IngestError::NonMonotonicDates(_))
        ));
        let wrong = "date,claims\n2020-01-04,5\n";
        assert!(matches!(
            read_indicator_csv(wrong.as_bytes(), IndicatorSchema::UnemploymentWeekly),
            Err(IngestError::SchemaMismatch(_))
        ));
        let garbage = "week_ending,initial_claims\nyesterday,5\n";
        assert!(matches!(
            read_indicator_csv(garbage.as_bytes(), IndicatorSchema::UnemploymentWeekly),
            Err(IngestError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn medicaid_months() {
        let text = "month,new_applications\n2019-02,10\n2019-01,20\n";
        let s = read_indicator_csv(text.as_bytes(), IndicatorSchema::MedicaidMonthly).unwrap();
        assert_eq!(s.points()[0].date, NaiveDate::from_ymd_opt(2019, 1, 1).unwrap());
        let mut out = Vec::new();
        write_indicator_csv(&s, IndicatorSchema::MedicaidMonthly, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "month,new_applications\n2019-01,20\n2019-02,10\n");
    }

    #[test]
    fn rsv_table_round_trip() {
        let catalog = Catalog::bundled();
        let text = "query_id,geo,granularity,date,value\n\
            medicaid,US,weekly,2020-01-12,40\n\
            medicaid,US,weekly,2020-01-05,100\n\
            medicare,US-NY,window,2020-03-01..2020-04-15,100\n\
            medicaid,US-NY,window,2020-03-01..2020-04-15,\n\
            medicaid,US-AL,window,2020-03-01..2020-04-15,55\n";
        let table = read_rsv_csv(text.as_bytes(), catalog).unwrap();
        assert_eq!(table.series.len(), 1);
        assert_eq!(table.series[0].points()[0].value, 100);
        let panel = &table.panels[0];
        assert_eq!(panel.states(), ["US-AL", "US-NY"]);
        assert_eq!(panel.query_ids(), ["medicaid", "medicare"]);
        assert_eq!(panel.get(1, 0), None);
        assert_eq!(panel.get(0, 1), None);
        assert_eq!(panel.get(0, 0), Some(55.0));

        let mut buf = Vec::new();
        write_rsv_csv(&table, &mut buf).unwrap();
        assert_eq!(read_rsv_csv(buf.as_slice(), catalog).unwrap(), table);
    }

    #[test]
    fn rsv_table_rejects_unknowns() {
        let c = Catalog::bundled();
        let q = "query_id,geo,granularity,date,value\nnope,US,weekly,2020-01-05,1\n";
        assert!(matches!(read_rsv_csv(q.as_bytes(), c), Err(IngestError::UnknownQuery(_))));
        let g = "query_id,geo,granularity,date,value\nmedicaid,US-ZZ,weekly,2020-01-05,1\n";
        assert!(matches!(read_rsv_csv(g.as_bytes(), c), Err(IngestError::UnknownGeography(_))));
        let v = "query_id,geo,granularity,date,value\nmedicaid,US,weekly,2020-01-05,101\n";
        assert!(read_rsv_csv(v.as_bytes(), c).is_err());
    }
}

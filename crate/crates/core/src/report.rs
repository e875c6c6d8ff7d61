//! Export payloads shared by the CLI and the HTTP API.
//!
//! Each builder reads a snapshot and returns a serializable report whose
//! floats are already rounded to 12 significant digits, so the JSON a CLI
//! run writes and the JSON the API serves are identical for the same
//! snapshot and parameters. Reports also render as CSV tables.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{
    self, classify_band, drop_incomplete_queries, interpret_component, pearson_matrix, AnalyticsError, Band,
    ChangeOutcome, MissingPolicy, PcaResult, Standardization,
};
use crate::canon::{fmt12, fmt12_opt, round12};
use crate::catalog::{Catalog, ThemedQuery};
use crate::geo;
use crate::leadlag::{self, LagCorrResult, LagObjective, LeadLagError, LeadTime, PolicyEvent};
use crate::panel::StatePanel;
use crate::series::{DateWindow, Granularity, RsvPoint, RsvSeries, ValueSeries};
use crate::snapshot::Snapshot;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown query id {0:?}")]
    UnknownQuery(String),
    #[error("unknown indicator {0:?}")]
    UnknownIndicator(String),
    #[error("unknown geography {0:?}")]
    UnknownGeography(String),
    #[error("snapshot has no series for {query_id} in {geo}")]
    SeriesNotFound { query_id: String, geo: String },
    #[error("window {requested} is not available; the state panel covers {available}")]
    WindowUnavailable { requested: DateWindow, available: DateWindow },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    LeadLag(#[from] LeadLagError),
}

impl ReportError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ReportError::UnknownQuery(_) => "unknown_query",
            ReportError::UnknownIndicator(_) => "unknown_indicator",
            ReportError::UnknownGeography(_) => "unknown_geography",
            ReportError::SeriesNotFound { .. } => "series_not_found",
            ReportError::WindowUnavailable { .. } => "window_unavailable",
            ReportError::InvalidParameter(_) => "invalid_parameter",
            ReportError::Analytics(_) => "analysis_failed",
            ReportError::LeadLag(_) => "leadlag_failed",
        }
    }

    /// Whether the error names something that does not exist.
    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            ReportError::UnknownQuery(_)
                | ReportError::UnknownIndicator(_)
                | ReportError::UnknownGeography(_)
                | ReportError::SeriesNotFound { .. }
        )
    }
}

/// One CSV file of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// A report that can be exported as CSV tables.
pub trait Tabular {
    fn tables(&self) -> Vec<CsvTable>;
}

fn check_query(catalog: &Catalog, id: &str) -> Result<(), ReportError> {
    catalog
        .get(id)
        .map(|_| ())
        .ok_or_else(|| ReportError::UnknownQuery(id.to_string()))
}

fn check_geo(code: &str) -> Result<(), ReportError> {
    if geo::is_valid_geo(code) {
        Ok(())
    } else {
        Err(ReportError::UnknownGeography(code.to_string()))
    }
}

/// The weekly series for (query, geo), falling back to the finest available.
fn analysis_series<'a>(snapshot: &'a Snapshot, query_id: &str, geo: &str) -> Result<&'a RsvSeries, ReportError> {
    snapshot
        .series(query_id, geo, Granularity::Weekly)
        .or_else(|| snapshot.finest_series(query_id, geo))
        .ok_or_else(|| ReportError::SeriesNotFound {
            query_id: query_id.to_string(),
            geo: geo.to_string(),
        })
}

fn check_window(panel: &StatePanel, requested: Option<DateWindow>) -> Result<(), ReportError> {
    match requested {
        Some(w) if w != panel.window => Err(ReportError::WindowUnavailable {
            requested: w,
            available: panel.window,
        }),
        _ => Ok(()),
    }
}

fn bool_str(b: bool) -> String {
    b.to_string()
}

// ---------------------------------------------------------------- catalog

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogReport {
    pub version: String,
    pub queries: Vec<ThemedQuery>,
}

pub fn catalog_report(catalog: &Catalog) -> CatalogReport {
    CatalogReport {
        version: catalog.version.clone(),
        queries: catalog.queries.clone(),
    }
}

impl Tabular for CatalogReport {
    fn tables(&self) -> Vec<CsvTable> {
        let mut t = CsvTable::new("catalog", &["id", "theme", "query", "ideology"]);
        for q in &self.queries {
            t.rows.push(vec![
                q.id.clone(),
                q.theme.as_str().to_string(),
                q.expr.canonical_text().to_string(),
                q.ideology.map(|i| i.as_str().to_string()).unwrap_or_default(),
            ]);
        }
        vec![t]
    }
}

// ---------------------------------------------------------------- trends

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendsReport {
    pub query_id: String,
    pub geo: String,
    pub granularity: Granularity,
    pub points: Vec<RsvPoint>,
}

pub fn trends_report(
    snapshot: &Snapshot,
    catalog: &Catalog,
    query_id: &str,
    geo: &str,
    granularity: Option<Granularity>,
    window: Option<DateWindow>,
) -> Result<TrendsReport, ReportError> {
    check_query(catalog, query_id)?;
    check_geo(geo)?;
    let series = match granularity {
        Some(g) => snapshot.series(query_id, geo, g).ok_or_else(|| ReportError::SeriesNotFound {
            query_id: query_id.to_string(),
            geo: geo.to_string(),
        })?,
        None => analysis_series(snapshot, query_id, geo)?,
    };
    let points = match window {
        Some(w) => series.slice(&w).points().to_vec(),
        None => series.points().to_vec(),
    };
    Ok(TrendsReport {
        query_id: series.query_id.clone(),
        geo: series.geo.clone(),
        granularity: series.granularity,
        points,
    })
}

impl Tabular for TrendsReport {
    fn tables(&self) -> Vec<CsvTable> {
        let mut t = CsvTable::new("trends", &["query_id", "geo", "granularity", "date", "value"]);
        for p in &self.points {
            t.rows.push(vec![
                self.query_id.clone(),
                self.geo.clone(),
                self.granularity.to_string(),
                p.date.to_string(),
                p.value.to_string(),
            ]);
        }
        vec![t]
    }
}

// ---------------------------------------------------------------- panel

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelReport {
    pub window: DateWindow,
    pub states: Vec<String>,
    pub query_ids: Vec<String>,
    /// `values[state][query]`; `null` marks a missing cell.
    pub values: Vec<Vec<Option<f64>>>,
    /// Queries with at least one missing state.
    pub incomplete_queries: Vec<String>,
}

pub fn panel_report(snapshot: &Snapshot, window: Option<DateWindow>) -> Result<PanelReport, ReportError> {
    let panel = &snapshot.state_window;
    check_window(panel, window)?;
    let incomplete_queries = (0..panel.n_queries())
        .filter(|&j| panel.column_has_missing(j))
        .map(|j| panel.query_ids()[j].clone())
        .collect();
    Ok(PanelReport {
        window: panel.window,
        states: panel.states().to_vec(),
        query_ids: panel.query_ids().to_vec(),
        values: panel.rows().to_vec(),
        incomplete_queries,
    })
}

impl Tabular for PanelReport {
    fn tables(&self) -> Vec<CsvTable> {
        let mut t = CsvTable::new("panel", &["state", "query_id", "value"]);
        for (state, row) in self.states.iter().zip(&self.values) {
            for (q, v) in self.query_ids.iter().zip(row) {
                t.rows.push(vec![state.clone(), q.clone(), fmt12_opt(*v)]);
            }
        }
        vec![t]
    }
}

// ---------------------------------------------------------------- change

pub const DEFAULT_CAP: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeParams {
    pub from: DateWindow,
    pub to: DateWindow,
    pub cap: Option<f64>,
}

impl Default for ChangeParams {
    /// January 2020 against March 2020, capped at 10,000%.
    fn default() -> Self {
        Self {
            from: DateWindow::month(2020, 1).expect("valid month"),
            to: DateWindow::month(2020, 3).expect("valid month"),
            cap: Some(DEFAULT_CAP),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeStatus {
    Change,
    /// The baseline mean is zero: a new topic, change undefined.
    ZeroBaseline,
    EmptyWindow,
}

impl ChangeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeStatus::Change => "change",
            ChangeStatus::ZeroBaseline => "zero_baseline",
            ChangeStatus::EmptyWindow => "empty_window",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeRow {
    pub query_id: String,
    pub theme: String,
    pub status: ChangeStatus,
    pub from_mean: Option<f64>,
    pub to_mean: Option<f64>,
    pub percent_change: Option<f64>,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeReport {
    pub geo: String,
    pub from_window: DateWindow,
    pub to_window: DateWindow,
    pub cap: Option<f64>,
    pub rows: Vec<ChangeRow>,
}

/// Percent change for every catalog query with a series in `geo`, in
/// catalog order.
pub fn change_report(
    snapshot: &Snapshot,
    catalog: &Catalog,
    geo: &str,
    params: &ChangeParams,
) -> Result<ChangeReport, ReportError> {
    check_geo(geo)?;
    if let Some(cap) = params.cap {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(ReportError::InvalidParameter(format!("cap must be positive, got {cap}")));
        }
    }
    let mut rows = Vec::new();
    for q in &catalog.queries {
        let Ok(series) = analysis_series(snapshot, &q.id, geo) else {
            continue;
        };
        let row = match analytics::percent_change(series, &params.from, &params.to, params.cap) {
            Ok(c) => {
                let (status, percent, capped) = match c.outcome {
                    ChangeOutcome::Change { percent, capped } => (ChangeStatus::Change, Some(round12(percent)), capped),
                    ChangeOutcome::ZeroBaseline => (ChangeStatus::ZeroBaseline, None, false),
                };
                ChangeRow {
                    query_id: q.id.clone(),
                    theme: q.theme.as_str().to_string(),
                    status,
                    from_mean: Some(round12(c.from_mean)),
                    to_mean: Some(round12(c.to_mean)),
                    percent_change: percent,
                    capped,
                }
            }
            Err(AnalyticsError::EmptyWindow(_)) => ChangeRow {
                query_id: q.id.clone(),
                theme: q.theme.as_str().to_string(),
                status: ChangeStatus::EmptyWindow,
                from_mean: None,
                to_mean: None,
                percent_change: None,
                capped: false,
            },
            Err(e) => return Err(e.into()),
        };
        rows.push(row);
    }
    Ok(ChangeReport {
        geo: geo.to_string(),
        from_window: params.from,
        to_window: params.to,
        cap: params.cap.map(round12),
        rows,
    })
}

impl Tabular for ChangeReport {
    fn tables(&self) -> Vec<CsvTable> {
        let mut t = CsvTable::new(
            "change",
            &["query_id", "theme", "from_mean", "to_mean", "percent_change", "capped", "status"],
        );
        for r in &self.rows {
            t.rows.push(vec![
                r.query_id.clone(),
                r.theme.clone(),
                fmt12_opt(r.from_mean),
                fmt12_opt(r.to_mean),
                fmt12_opt(r.percent_change),
                bool_str(r.capped),
                r.status.as_str().to_string(),
            ]);
        }
        vec![t]
    }
}

// ---------------------------------------------------------------- correlation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub query_a: String,
    pub query_b: String,
    pub r: Option<f64>,
    pub n_pairs: usize,
    pub band: Option<Band>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub window: DateWindow,
    pub policy: MissingPolicy,
    /// Queries removed for having missing states, in panel order.
    pub dropped: Vec<String>,
    pub query_ids: Vec<String>,
    /// Every unordered pair `a < b` in panel order.
    pub pairs: Vec<CorrelationPair>,
}

/// Pairwise-complete correlation over the state panel, optionally after
/// removing incomplete queries (the default analysis path).
pub fn correlation_report(snapshot: &Snapshot, drop_incomplete: bool) -> Result<CorrelationReport, ReportError> {
    let (panel, dropped) = if drop_incomplete {
        drop_incomplete_queries(&snapshot.state_window)?
    } else {
        (snapshot.state_window.clone(), Vec::new())
    };
    let m = pearson_matrix(&panel, MissingPolicy::PairwiseComplete)?;
    let mut pairs = Vec::new();
    for a in 0..m.query_ids.len() {
        for b in a + 1..m.query_ids.len() {
            let r = m.get(a, b).map(round12);
            pairs.push(CorrelationPair {
                query_a: m.query_ids[a].clone(),
                query_b: m.query_ids[b].clone(),
                r,
                n_pairs: m.n_pairs[a][b],
                band: r.map(classify_band).transpose()?,
            });
        }
    }
    Ok(CorrelationReport {
        window: panel.window,
        policy: MissingPolicy::PairwiseComplete,
        dropped,
        query_ids: m.query_ids,
        pairs,
    })
}

fn band_str(b: Option<Band>) -> String {
    match b {
        Some(Band::Low) => "low".into(),
        Some(Band::Moderate) => "moderate".into(),
        Some(Band::High) => "high".into(),
        None => String::new(),
    }
}

impl Tabular for CorrelationReport {
    fn tables(&self) -> Vec<CsvTable> {
        let mut dropped = CsvTable::new("dropped", &["query_id"]);
        dropped.rows = self.dropped.iter().map(|q| vec![q.clone()]).collect();
        let mut t = CsvTable::new("correlation", &["query_a", "query_b", "r", "n_pairs", "band"]);
        for p in &self.pairs {
            t.rows.push(vec![
                p.query_a.clone(),
                p.query_b.clone(),
                fmt12_opt(p.r),
                p.n_pairs.to_string(),
                band_str(p.band),
            ]);
        }
        vec![dropped, t]
    }
}

// ---------------------------------------------------------------- pca

pub const DEFAULT_K: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loading {
    pub query_id: String,
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateScore {
    pub state: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    /// One-based component number.
    pub component: usize,
    pub eigenvalue: f64,
    pub explained_variance_ratio: f64,
    pub unstable: bool,
    pub loadings: Vec<Loading>,
    pub scores: Vec<StateScore>,
    /// Loadings with `|loading| >= threshold`, by descending magnitude.
    pub salient: Vec<Loading>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaReport {
    pub window: DateWindow,
    pub standardization: Standardization,
    pub dropped: Vec<String>,
    pub threshold: f64,
    pub components: Vec<ComponentReport>,
}

fn check_threshold(threshold: f64) -> Result<(), ReportError> {
    if threshold.is_finite() && threshold >= 0.0 {
        Ok(())
    } else {
        Err(ReportError::InvalidParameter(format!(
            "threshold must be a non-negative number, got {threshold}"
        )))
    }
}

fn fit_pca(snapshot: &Snapshot, k: usize) -> Result<(PcaResult, Vec<String>), ReportError> {
    let (panel, dropped) = drop_incomplete_queries(&snapshot.state_window)?;
    Ok((analytics::pca(&panel, k)?, dropped))
}

fn loadings_of(ids: &[(String, f64)]) -> Vec<Loading> {
    ids.iter()
        .map(|(q, l)| Loading {
            query_id: q.clone(),
            loading: round12(*l),
        })
        .collect()
}

/// PCA of the complete part of the state panel with `k` components.
pub fn pca_report(snapshot: &Snapshot, k: usize, threshold: f64) -> Result<PcaReport, ReportError> {
    check_threshold(threshold)?;
    let (result, dropped) = fit_pca(snapshot, k)?;
    let components = result
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let interp = interpret_component(&result, i, threshold, 0)?;
            Ok(ComponentReport {
                component: i + 1,
                eigenvalue: round12(c.eigenvalue),
                explained_variance_ratio: round12(c.explained_variance_ratio),
                unstable: c.unstable,
                loadings: result
                    .query_ids
                    .iter()
                    .zip(&c.loadings)
                    .map(|(q, l)| Loading {
                        query_id: q.clone(),
                        loading: round12(*l),
                    })
                    .collect(),
                scores: result
                    .states
                    .iter()
                    .zip(&c.scores)
                    .map(|(s, v)| StateScore {
                        state: s.clone(),
                        score: round12(*v),
                    })
                    .collect(),
                salient: loadings_of(&interp.salient),
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    Ok(PcaReport {
        window: snapshot.state_window.window,
        standardization: result.standardization,
        dropped,
        threshold: round12(threshold),
        components,
    })
}

impl Tabular for PcaReport {
    fn tables(&self) -> Vec<CsvTable> {
        let mut loadings = CsvTable::new("loadings", &["component", "query_id", "loading"]);
        let mut scores = CsvTable::new("scores", &["component", "state", "score"]);
        let mut variance = CsvTable::new("variance", &["component", "explained_variance_ratio"]);
        let mut salient = CsvTable::new("salient", &["component", "query_id", "loading"]);
        for c in &self.components {
            let k = c.component.to_string();
            for l in &c.loadings {
                loadings.rows.push(vec![k.clone(), l.query_id.clone(), fmt12(l.loading)]);
            }
            for s in &c.scores {
                scores.rows.push(vec![k.clone(), s.state.clone(), fmt12(s.score)]);
            }
            variance.rows.push(vec![k.clone(), fmt12(c.explained_variance_ratio)]);
            for l in &c.salient {
                salient.rows.push(vec![k.clone(), l.query_id.clone(), fmt12(l.loading)]);
            }
        }
        vec![loadings, scores, variance, salient]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretReport {
    /// One-based component number.
    pub component: usize,
    pub threshold: f64,
    pub n_top: usize,
    pub explained_variance_ratio: f64,
    pub salient: Vec<Loading>,
    pub top_states: Vec<StateScore>,
    pub label: Option<String>,
}

/// Interpretation of one component (one-based), with an optional analyst
/// label carried through untouched.
pub fn interpret_report(
    snapshot: &Snapshot,
    component: usize,
    threshold: f64,
    n_top: usize,
    label: Option<String>,
) -> Result<InterpretReport, ReportError> {
    check_threshold(threshold)?;
    if component == 0 {
        return Err(ReportError::InvalidParameter("components are numbered from 1".into()));
    }
    let (result, _) = fit_pca(snapshot, component)?;
    let interp = interpret_component(&result, component - 1, threshold, n_top)?;
    Ok(InterpretReport {
        component,
        threshold: round12(threshold),
        n_top,
        explained_variance_ratio: round12(result.components[component - 1].explained_variance_ratio),
        salient: loadings_of(&interp.salient),
        top_states: interp
            .top_states
            .iter()
            .map(|(s, v)| StateScore {
                state: s.clone(),
                score: round12(*v),
            })
            .collect(),
        label,
    })
}

impl Tabular for InterpretReport {
    fn tables(&self) -> Vec<CsvTable> {
        let k = self.component.to_string();
        let mut salient = CsvTable::new("salient", &["component", "query_id", "loading"]);
        for l in &self.salient {
            salient.rows.push(vec![k.clone(), l.query_id.clone(), fmt12(l.loading)]);
        }
        let mut top = CsvTable::new("top_states", &["component", "rank", "state", "score"]);
        for (i, s) in self.top_states.iter().enumerate() {
            top.rows.push(vec![k.clone(), (i + 1).to_string(), s.state.clone(), fmt12(s.score)]);
        }
        vec![salient, top]
    }
}

// ---------------------------------------------------------------- choropleth

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoValue {
    pub geo: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoroplethReport {
    pub query_id: String,
    pub window: DateWindow,
    pub values: Vec<GeoValue>,
}

pub fn choropleth_report(
    snapshot: &Snapshot,
    catalog: &Catalog,
    query_id: &str,
    window: Option<DateWindow>,
) -> Result<ChoroplethReport, ReportError> {
    check_query(catalog, query_id)?;
    let panel = &snapshot.state_window;
    check_window(panel, window)?;
    let j = panel.query_index(query_id).ok_or_else(|| ReportError::SeriesNotFound {
        query_id: query_id.to_string(),
        geo: "state panel".to_string(),
    })?;
    Ok(ChoroplethReport {
        query_id: query_id.to_string(),
        window: panel.window,
        values: panel
            .states()
            .iter()
            .zip(panel.column(j))
            .map(|(s, v)| GeoValue {
                geo: s.clone(),
                value: v.map(round12),
            })
            .collect(),
    })
}

impl Tabular for ChoroplethReport {
    fn tables(&self) -> Vec<CsvTable> {
        let mut t = CsvTable::new("choropleth", &["query_id", "geo", "value"]);
        for v in &self.values {
            t.rows.push(vec![self.query_id.clone(), v.geo.clone(), fmt12_opt(v.value)]);
        }
        vec![t]
    }
}

// ---------------------------------------------------------------- lead-lag

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagSpec {
    Single(i64),
    Range(i64, i64),
}

impl Default for LagSpec {
    fn default() -> Self {
        LagSpec::Range(-8, 8)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadLagParams {
    pub query_id: String,
    pub indicator: String,
    pub lags: LagSpec,
    pub objective: LagObjective,
    /// Seasonally adjust both series against this baseline first.
    pub baseline: Option<DateWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadLagReport {
    pub query_id: String,
    pub indicator: String,
    pub granularity: Granularity,
    pub objective: LagObjective,
    pub seasonal_baseline: Option<DateWindow>,
    /// Correlation at every lag in the requested range that had one.
    pub profile: Vec<LagCorrResult>,
    pub best: LagCorrResult,
}

fn round_lag(r: LagCorrResult) -> LagCorrResult {
    LagCorrResult { r: round12(r.r), ..r }
}

/// National query series against an indicator, aggregated to the
/// indicator's granularity (monthly means for monthly indicators).
pub fn leadlag_report(snapshot: &Snapshot, catalog: &Catalog, params: &LeadLagParams) -> Result<LeadLagReport, ReportError> {
    check_query(catalog, &params.query_id)?;
    let indicator = snapshot
        .indicator(&params.indicator)
        .ok_or_else(|| ReportError::UnknownIndicator(params.indicator.clone()))?;
    let series = analysis_series(snapshot, &params.query_id, geo::NATIONAL)?;
    let mut query: ValueSeries = series.to_values();
    let mut target = indicator.to_values();
    if target.granularity == Granularity::Monthly && query.granularity != Granularity::Monthly {
        query = query.monthly_means();
    }
    if let Some(baseline) = &params.baseline {
        query = leadlag::seasonal_adjust(&query, baseline)?;
        target = leadlag::seasonal_adjust(&target, baseline)?;
    }
    let (profile, best) = match params.lags {
        LagSpec::Single(lag) => {
            let r = round_lag(leadlag::lagged_correlation(&query, &target, lag)?);
            (vec![r], r)
        }
        LagSpec::Range(lo, hi) => {
            if lo > hi {
                return Err(ReportError::InvalidParameter(format!("lag_min {lo} exceeds lag_max {hi}")));
            }
            let profile = leadlag::lag_profile(&query, &target, lo..=hi);
            let best = leadlag::best_lag(&query, &target, lo..=hi, params.objective)?;
            (profile.into_iter().map(round_lag).collect(), round_lag(best))
        }
    };
    Ok(LeadLagReport {
        query_id: params.query_id.clone(),
        indicator: params.indicator.clone(),
        granularity: query.granularity,
        objective: params.objective,
        seasonal_baseline: params.baseline,
        profile,
        best,
    })
}

impl Tabular for LeadLagReport {
    fn tables(&self) -> Vec<CsvTable> {
        let mut t = CsvTable::new("leadlag", &["lag", "r", "n"]);
        for p in &self.profile {
            t.rows.push(vec![p.lag.to_string(), fmt12(p.r), p.n.to_string()]);
        }
        vec![t]
    }
}

// ---------------------------------------------------------------- lead time

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeadStatus {
    Lead,
    NoCrossing,
    /// The series ends before the event date.
    InsufficientCoverage,
}

impl LeadStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LeadStatus::Lead => "lead",
            LeadStatus::NoCrossing => "no_crossing",
            LeadStatus::InsufficientCoverage => "insufficient_coverage",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLead {
    pub event: String,
    pub event_date: NaiveDate,
    pub status: LeadStatus,
    /// Positive when the search signal crossed before the event.
    pub lead_days: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadTimeReport {
    pub query_id: String,
    pub threshold: u8,
    pub granularity: Granularity,
    pub crossing: Option<NaiveDate>,
    pub events: Vec<EventLead>,
}

/// Lead time of the query's finest national series against each event.
pub fn leadtime_report(
    snapshot: &Snapshot,
    catalog: &Catalog,
    query_id: &str,
    threshold: u8,
    events: &[PolicyEvent],
) -> Result<LeadTimeReport, ReportError> {
    check_query(catalog, query_id)?;
    let series = snapshot
        .finest_series(query_id, geo::NATIONAL)
        .ok_or_else(|| ReportError::SeriesNotFound {
            query_id: query_id.to_string(),
            geo: geo::NATIONAL.to_string(),
        })?;
    let events = events
        .iter()
        .map(|e| {
            let (status, lead_days) = match leadlag::lead_time(series, threshold, e) {
                Ok(LeadTime::Lead { days, .. }) => (LeadStatus::Lead, Some(days)),
                Ok(LeadTime::NoCrossing) => (LeadStatus::NoCrossing, None),
                Err(LeadLagError::InsufficientCoverage { .. }) => (LeadStatus::InsufficientCoverage, None),
                Err(other) => return Err(other.into()),
            };
            Ok(EventLead {
                event: e.name.clone(),
                event_date: e.date,
                status,
                lead_days,
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    Ok(LeadTimeReport {
        query_id: query_id.to_string(),
        threshold,
        granularity: series.granularity,
        crossing: leadlag::first_crossing(series, threshold),
        events,
    })
}

impl Tabular for LeadTimeReport {
    fn tables(&self) -> Vec<CsvTable> {
        let mut t = CsvTable::new(
            "leadtime",
            &["query_id", "event", "event_date", "crossing", "lead_days", "status"],
        );
        let crossing = self.crossing.map(|d| d.to_string()).unwrap_or_default();
        for e in &self.events {
            t.rows.push(vec![
                self.query_id.clone(),
                e.event.clone(),
                e.event_date.to_string(),
                crossing.clone(),
                e.lead_days.map(|d| d.to_string()).unwrap_or_default(),
                e.status.as_str().to_string(),
            ]);
        }
        vec![t]
    }
}

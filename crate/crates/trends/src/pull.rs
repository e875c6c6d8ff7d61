//! Acquisition of a complete snapshot from a trends source.

use chrono::{SubsecRound, Utc};
use infoveil_core::geo;
use infoveil_core::panel::PanelError;
use infoveil_core::snapshot::SnapshotError;
use infoveil_core::{Catalog, DateWindow, Granularity, IndicatorSeries, RsvSeries, Snapshot, StatePanel};
use thiserror::Error;
use tokio::task::JoinSet;

use crate::client::{StateValues, TrendsClient, TrendsError};

#[derive(Debug, Error)]
pub enum PullError {
    #[error("{query_id}: {source}")]
    Fetch {
        query_id: String,
        #[source]
        source: TrendsError,
    },
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

/// What to pull: one national series per query plus one state aggregate
/// per query, and optional per-state weekly series for selected queries.
#[derive(Debug, Clone)]
pub struct PullPlan {
    pub national_window: DateWindow,
    pub granularity: Granularity,
    pub state_window: DateWindow,
    pub state_weekly_queries: Vec<String>,
}

enum Pulled {
    National(RsvSeries),
    StateWeekly(RsvSeries),
    States(StateValues),
}

/// Fetches everything in `plan` concurrently (the client's shared limiter
/// still spaces the requests) and assembles a snapshot.
pub async fn pull_snapshot(
    client: &TrendsClient,
    catalog: &Catalog,
    plan: &PullPlan,
    indicators: Vec<IndicatorSeries>,
) -> Result<Snapshot, PullError> {
    let mut tasks = JoinSet::new();
    for q in &catalog.queries {
        let (c, id, expr, plan) = (client.clone(), q.id.clone(), q.expr.clone(), plan.clone());
        tasks.spawn(async move {
            let r = c
                .fetch_interest_over_time(&id, &expr, geo::NATIONAL, &plan.national_window, plan.granularity)
                .await
                .map(Pulled::National);
            (id, r)
        });
        let (c, id, expr, plan) = (client.clone(), q.id.clone(), q.expr.clone(), plan.clone());
        tasks.spawn(async move {
            let r = c
                .fetch_interest_by_state(&id, &expr, &plan.state_window)
                .await
                .map(Pulled::States);
            (id, r)
        });
        if plan.state_weekly_queries.contains(&q.id) {
            for state in geo::state_codes() {
                let (c, id, expr, plan) = (client.clone(), q.id.clone(), q.expr.clone(), plan.clone());
                tasks.spawn(async move {
                    let r = c
                        .fetch_interest_over_time(&id, &expr, state, &plan.national_window, Granularity::Weekly)
                        .await
                        .map(Pulled::StateWeekly);
                    (id, r)
                });
            }
        }
    }

    let mut national = Vec::new();
    let mut state_weekly = Vec::new();
    let mut by_state = Vec::new();
    while let Some(joined) = tasks.join_next().await {
        let (query_id, result) = joined.expect("fetch task panicked");
        match result.map_err(|source| PullError::Fetch { query_id, source })? {
            Pulled::National(s) => national.push(s),
            Pulled::StateWeekly(s) => state_weekly.push(s),
            Pulled::States(v) => by_state.push(v),
        }
    }
    by_state.sort_by_key(|v| catalog.position(&v.query_id));

    let states: Vec<String> = geo::state_codes().map(String::from).collect();
    let columns: Vec<Vec<Option<f64>>> = by_state
        .iter()
        .map(|v| v.values.iter().map(|(_, x)| x.map(f64::from)).collect())
        .collect();
    let ids = by_state.iter().map(|v| v.query_id.clone()).collect();
    let panel = StatePanel::from_columns(plan.state_window, states, ids, &columns)?;
    Ok(Snapshot::new(
        Utc::now().trunc_subsecs(0),
        catalog.version.clone(),
        national,
        state_weekly,
        panel,
        indicators,
    )?)
}

//! Geography x query matrix of aggregated RSVs over one window.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::DateWindow;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PanelError {
    #[error("panel has {rows} value rows for {states} states")]
    RowCount { rows: usize, states: usize },
    #[error("row for `{state}` has {cells} cells for {queries} queries")]
    ColumnCount {
        state: String,
        cells: usize,
        queries: usize,
    },
    #[error("cell ({state}, {query_id}) = {value} is outside 0..=100")]
    OutOfRange {
        state: String,
        query_id: String,
        value: f64,
    },
    #[error("duplicate axis label `{0}`")]
    DuplicateLabel(String),
}

/// Row-major panel: `values[state][query]`, `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePanel {
    pub window: DateWindow,
    states: Vec<String>,
    query_ids: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
}

impl StatePanel {
    pub fn new(
        window: DateWindow,
        states: Vec<String>,
        query_ids: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self, PanelError> {
        if values.len() != states.len() {
            return Err(PanelError::RowCount {
                rows: values.len(),
                states: states.len(),
            });
        }
        for labels in [&states, &query_ids] {
            let mut seen = std::collections::HashSet::new();
            for l in labels {
                if !seen.insert(l) {
                    return Err(PanelError::DuplicateLabel(l.clone()));
                }
            }
        }
        for (state, row) in states.iter().zip(&values) {
            if row.len() != query_ids.len() {
                return Err(PanelError::ColumnCount {
                    state: state.clone(),
                    cells: row.len(),
                    queries: query_ids.len(),
                });
            }
            for (q, cell) in query_ids.iter().zip(row) {
                if let Some(v) = *cell {
                    if !(v.is_finite() && (0.0..=100.0).contains(&v)) {
                        return Err(PanelError::OutOfRange {
                            state: state.clone(),
                            query_id: q.clone(),
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(Self {
            window,
            states,
            query_ids,
            values,
        })
    }

    /// Builds a panel from per-query columns (each of length `states.len()`).
    pub fn from_columns(
        window: DateWindow,
        states: Vec<String>,
        query_ids: Vec<String>,
        columns: &[Vec<Option<f64>>],
    ) -> Result<Self, PanelError> {
        let rows = (0..states.len())
            .map(|i| columns.iter().map(|c| c.get(i).copied().flatten()).collect())
            .collect();
        Self::new(window, states, query_ids, rows)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn query_ids(&self) -> &[String] {
        &self.query_ids
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_queries(&self) -> usize {
        self.query_ids.len()
    }

    pub fn get(&self, state: usize, query: usize) -> Option<f64> {
        self.values[state][query]
    }

    pub fn column(&self, query: usize) -> Vec<Option<f64>> {
        self.values.iter().map(|row| row[query]).collect()
    }

    pub fn query_index(&self, id: &str) -> Option<usize> {
        self.query_ids.iter().position(|q| q == id)
    }

    pub fn state_index(&self, geo: &str) -> Option<usize> {
        self.states.iter().position(|s| s == geo)
    }

    pub fn column_has_missing(&self, query: usize) -> bool {
        self.values.iter().any(|row| row[query].is_none())
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|row| row.iter().all(Option::is_some))
    }

    /// Restricts the panel to the given query columns, in the given order.
    pub fn select_queries(&self, columns: &[usize]) -> StatePanel {
        StatePanel {
            window: self.window,
            states: self.states.clone(),
            query_ids: columns.iter().map(|&j| self.query_ids[j].clone()).collect(),
            values: self
                .values
                .iter()
                .map(|row| columns.iter().map(|&j| row[j]).collect())
                .collect(),
        }
    }

    /// Dense column-major copy; `None` if any cell is missing.
    pub fn dense_columns(&self) -> Option<Vec<Vec<f64>>> {
        (0..self.n_queries())
            .map(|j| self.values.iter().map(|row| row[j]).collect::<Option<Vec<f64>>>())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> DateWindow {
        "2020-03-01..2020-04-15".parse().unwrap()
    }

    #[test]
    fn dimension_checks() {
        let err = StatePanel::new(window(), vec!["US-AL".into()], vec!["a".into()], vec![]);
        assert!(matches!(err, Err(PanelError::RowCount { .. })));
        let err = StatePanel::new(
            window(),
            vec!["US-AL".into()],
            vec!["a".into(), "b".into()],
            vec![vec![Some(1.0)]],
        );
        assert!(matches!(err, Err(PanelError::ColumnCount { .. })));
        let err = StatePanel::new(window(), vec!["US-AL".into()], vec!["a".into()], vec![vec![Some(120.0)]]);
        assert!(matches!(err, Err(PanelError::OutOfRange { .. })));
    }

    #[test]
    fn columns_and_selection() {
        let p = StatePanel::from_columns(
            window(),
            vec!["US-AL".into(), "US-AK".into()],
            vec!["a".into(), "b".into()],
            &[vec![Some(1.0), None], vec![Some(3.0), Some(4.0)]],
        )
        .unwrap();
        assert!(p.column_has_missing(0));
        assert!(!p.is_complete());
        assert!(p.dense_columns().is_none());
        let b = p.select_queries(&[1]);
        assert_eq!(b.query_ids(), ["b"]);
        assert_eq!(b.dense_columns().unwrap(), vec![vec![3.0, 4.0]]);
    }
}

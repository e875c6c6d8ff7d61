use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::panel::StatePanel;
use crate::stats::pearson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MissingPolicy {
    /// Each pair uses the states where both queries are present.
    #[default]
    PairwiseComplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub query_ids: Vec<String>,
    /// `None` where fewer than two complete pairs exist or a column is
    /// constant over the complete pairs.
    pub r: Vec<Vec<Option<f64>>>,
    pub n_pairs: Vec<Vec<usize>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.r[a][b]
    }
}

/// Removes every query with at least one missing state, keeping all states.
///
/// Returns the reduced panel and the dropped ids in panel order.
pub fn drop_incomplete_queries(panel: &StatePanel) -> Result<(StatePanel, Vec<String>), AnalyticsError> {
    let (keep, drop): (Vec<usize>, Vec<usize>) =
        (0..panel.n_queries()).partition(|&j| !panel.column_has_missing(j));
    if keep.is_empty() && panel.n_queries() > 0 {
        return Err(AnalyticsError::AllQueriesDropped);
    }
    let dropped = drop.iter().map(|&j| panel.query_ids()[j].clone()).collect();
    Ok((panel.select_queries(&keep), dropped))
}

pub fn pearson_matrix(panel: &StatePanel, policy: MissingPolicy) -> Result<CorrelationMatrix, AnalyticsError> {
    let MissingPolicy::PairwiseComplete = policy;
    if panel.n_states() < 2 {
        return Err(AnalyticsError::TooFewStates(panel.n_states()));
    }
    let p = panel.n_queries();
    let columns: Vec<Vec<Option<f64>>> = (0..p).map(|j| panel.column(j)).collect();
    let mut r = vec![vec![None; p]; p];
    let mut n_pairs = vec![vec![0usize; p]; p];
    for a in 0..p {
        for b in a..p {
            let (value, n) = pairwise_pearson(&columns[a], &columns[b]);
            let value = if a == b { value.map(|_| 1.0) } else { value };
            r[a][b] = value;
            r[b][a] = value;
            n_pairs[a][b] = n;
            n_pairs[b][a] = n;
        }
    }
    Ok(CorrelationMatrix {
        query_ids: panel.query_ids().to_vec(),
        r,
        n_pairs,
    })
}

fn pairwise_pearson(x: &[Option<f64>], y: &[Option<f64>]) -> (Option<f64>, usize) {
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    (pearson(&pairs), pairs.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    Low,
    Moderate,
    High,
}

/// Bands `|r|`: Low `[0, 0.4)`, Moderate `[0.4, 0.6)`, High `[0.6, 1]`.
pub fn classify_band(r: f64) -> Result<Band, AnalyticsError> {
    let m = r.abs();
    if !(m <= 1.0 + 1e-12) {
        return Err(AnalyticsError::OutOfRange(r));
    }
    Ok(if m < 0.4 {
        Band::Low
    } else if m < 0.6 {
        Band::Moderate
    } else {
        Band::High
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::DateWindow;

    fn panel(columns: &[Vec<Option<f64>>]) -> StatePanel {
        let window: DateWindow = "2020-03-01..2020-04-15".parse().unwrap();
        let n = columns[0].len();
        let states = (0..n).map(|i| format!("S{i}")).collect();
        let ids = (0..columns.len()).map(|j| format!("q{j}")).collect();
        StatePanel::from_columns(window, states, ids, columns).unwrap()
    }

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn identical_columns() {
        let x = some(&[3.0, 10.0, 47.0, 100.0, 12.0]);
        let m = pearson_matrix(&panel(&[x.clone(), x]), MissingPolicy::PairwiseComplete).unwrap();
        assert!((m.get(0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.get(0, 0), Some(1.0));
        assert_eq!(m.n_pairs[0][1], 5);
    }

    #[test]
    fn affine_anticorrelation() {
        let raw = [3.0, 10.0, 47.0, 100.0, 12.0];
        let pairs: Vec<(f64, f64)> = raw.iter().map(|&v| (v, -v + 200.0)).collect();
        assert!((pearson(&pairs).unwrap() + 1.0).abs() < 1e-12);
        // RSV panels stay inside 0..=100, so mirror around 100 there
        let x = some(&raw);
        let y = some(&raw.map(|v| -v + 100.0));
        let m = pearson_matrix(&panel(&[x, y]), MissingPolicy::PairwiseComplete).unwrap();
        assert!((m.get(0, 1).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_markers() {
        let x = vec![Some(1.0), None, Some(3.0)];
        let y = vec![None, Some(2.0), Some(5.0)];
        let c = some(&[4.0, 4.0, 4.0]);
        let m = pearson_matrix(&panel(&[x, y, c]), MissingPolicy::PairwiseComplete).unwrap();
        assert_eq!(m.get(0, 1), None);
        assert_eq!(m.n_pairs[0][1], 1);
        assert_eq!(m.get(2, 0), None, "constant column");
        assert_eq!(m.get(2, 2), None);
        assert_eq!(m.get(0, 0), Some(1.0));
    }

    #[test]
    fn too_few_states() {
        let p = panel(&[some(&[1.0])]);
        assert_eq!(
            pearson_matrix(&p, MissingPolicy::PairwiseComplete),
            Err(AnalyticsError::TooFewStates(1))
        );
    }

    #[test]
    fn bands() {
        assert_eq!(classify_band(0.5), Ok(Band::Moderate));
        assert_eq!(classify_band(0.0), Ok(Band::Low));
        assert_eq!(classify_band(-0.7), Ok(Band::High));
        assert_eq!(classify_band(0.4), Ok(Band::Moderate));
        assert_eq!(classify_band(0.6), Ok(Band::High));
        assert_eq!(classify_band(1.0), Ok(Band::High));
        assert_eq!(classify_band(0.399_999), Ok(Band::Low));
        assert!(classify_band(1.2).is_err());
        assert!(classify_band(f64::NAN).is_err());
    }

    #[test]
    fn drop_incomplete() {
        let p = panel(&[
            some(&[1.0, 2.0, 3.0]),
            vec![Some(1.0), None, Some(2.0)],
            some(&[5.0, 1.0, 0.0]),
        ]);
        let (reduced, dropped) = drop_incomplete_queries(&p).unwrap();
        assert_eq!(dropped, vec!["q1".to_string()]);
        assert_eq!(reduced.query_ids(), ["q0", "q2"]);
        assert!(reduced.is_complete());

        let complete = panel(&[some(&[1.0, 2.0]), some(&[2.0, 1.0])]);
        let (same, none) = drop_incomplete_queries(&complete).unwrap();
        assert_eq!(same, complete);
        assert!(none.is_empty());

        let hopeless = panel(&[vec![None, Some(1.0)]]);
        assert_eq!(drop_incomplete_queries(&hopeless), Err(AnalyticsError::AllQueriesDropped));
    }
}

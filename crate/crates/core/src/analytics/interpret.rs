use serde::{Deserialize, Serialize};

use super::{AnalyticsError, PcaResult};

/// Loadings with magnitude at least this are used to explain a component.
pub const DEFAULT_THRESHOLD: f64 = 0.2;
pub const DEFAULT_N_TOP: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentInterpretation {
    /// Zero-based component index.
    pub component_index: usize,
    pub threshold: f64,
    /// `(query_id, loading)` with `|loading| >= threshold`, by descending magnitude.
    pub salient: Vec<(String, f64)>,
    /// Highest-scoring states, descending.
    pub top_states: Vec<(String, f64)>,
    /// Analyst-supplied typology label; never derived automatically.
    pub label: Option<String>,
}

pub fn interpret_component(
    result: &PcaResult,
    component_index: usize,
    threshold: f64,
    n_top_states: usize,
) -> Result<ComponentInterpretation, AnalyticsError> {
    let component = result.component(component_index)?;
    let mut salient: Vec<(String, f64)> = result
        .query_ids
        .iter()
        .zip(&component.loadings)
        .filter(|(_, l)| l.abs() >= threshold)
        .map(|(q, l)| (q.clone(), *l))
        .collect();
    // stable sort keeps panel order among equal magnitudes
    salient.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));

    let mut states: Vec<(String, f64)> = result
        .states
        .iter()
        .cloned()
        .zip(component.scores.iter().copied())
        .collect();
    states.sort_by(|a, b| b.1.total_cmp(&a.1));
    states.truncate(n_top_states);

    Ok(ComponentInterpretation {
        component_index,
        threshold,
        salient,
        top_states: states,
        label: None,
    })
}

impl ComponentInterpretation {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn salient_ids(&self) -> Vec<&str> {
        self.salient.iter().map(|(q, _)| q.as_str()).collect()
    }

    pub fn top_state_codes(&self) -> Vec<&str> {
        self.top_states.iter().map(|(s, _)| s.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{Component, Standardization};

    fn result(loadings: Vec<f64>, scores: Vec<f64>) -> PcaResult {
        PcaResult {
            query_ids: (0..loadings.len()).map(|j| format!("q{j}")).collect(),
            states: (0..scores.len()).map(|i| format!("S{i}")).collect(),
            standardization: Standardization::ZScore,
            components: vec![Component {
                loadings,
                eigenvalue: 1.0,
                explained_variance_ratio: 1.0,
                scores,
                unstable: false,
            }],
        }
    }

    #[test]
    fn threshold_is_on_magnitude() {
        let r = result(vec![0.15, -0.35, 0.9, 0.2], vec![0.0]);
        let i = interpret_component(&r, 0, 0.2, 5).unwrap();
        assert_eq!(i.salient_ids(), vec!["q2", "q1", "q3"]);
        assert!(i.salient.iter().all(|(_, l)| l.abs() >= 0.2));
    }

    #[test]
    fn top_states_sorted_and_truncated() {
        let r = result(vec![1.0], vec![0.5, 2.0, -1.0, 1.0]);
        let i = interpret_component(&r, 0, 0.2, 2).unwrap();
        assert_eq!(i.top_state_codes(), vec!["S1", "S3"]);
        let all = interpret_component(&r, 0, 0.2, 10).unwrap();
        assert_eq!(all.top_states.len(), 4);
        assert!(all.top_states.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn vacuous_threshold_and_bad_index() {
        let r = result(vec![0.6, 0.8], vec![0.0]);
        assert!(interpret_component(&r, 0, 1.0, 5).unwrap().salient.is_empty());
        assert_eq!(
            interpret_component(&r, 1, 0.2, 5),
            Err(AnalyticsError::BadIndex { index: 1, available: 1 })
        );
    }
}

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::linalg::{dot, symmetric_eigen};
use crate::panel::StatePanel;

/// Eigenvalues closer than this (relative) are reported as unstable.
const DEGENERATE_GAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Standardization {
    /// Columns centred and divided by their sample standard deviation,
    /// i.e. PCA of the correlation matrix.
    #[default]
    ZScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    /// Unit-norm loading vector, one entry per query.
    pub loadings: Vec<f64>,
    pub eigenvalue: f64,
    pub explained_variance_ratio: f64,
    /// Projection of each state's standardized row onto the loadings.
    pub scores: Vec<f64>,
    /// Set when a neighbouring eigenvalue is within the degeneracy gap, so
    /// the direction is not uniquely determined.
    pub unstable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub query_ids: Vec<String>,
    pub states: Vec<String>,
    pub standardization: Standardization,
    pub components: Vec<Component>,
}

/// Correlation-matrix PCA of a complete panel, keeping `k` components.
///
/// Each component is oriented so that its largest-magnitude loading is
/// positive (first such query when magnitudes tie within 1e-9).
pub fn pca(panel: &StatePanel, k: usize) -> Result<PcaResult, AnalyticsError> {
    let columns = panel.dense_columns().ok_or(AnalyticsError::MissingCells)?;
    let n = panel.n_states();
    let p = panel.n_queries();
    if n < 2 {
        return Err(AnalyticsError::TooFewStates(n));
    }
    if k == 0 {
        return Err(AnalyticsError::ZeroComponents);
    }
    let max = (n - 1).min(p);
    if k > max {
        return Err(AnalyticsError::KTooLarge { requested: k, max });
    }

    let z = standardize(&columns, panel.query_ids())?;
    let corr: Vec<Vec<f64>> = (0..p)
        .map(|a| (0..p).map(|b| dot(&z[a], &z[b]) / (n - 1) as f64).collect())
        .collect();
    let eig = symmetric_eigen(&corr);
    let total: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();

    let components = (0..k)
        .map(|c| {
            let mut loadings = eig.vectors[c].clone();
            orient(&mut loadings);
            let scores = (0..n)
                .map(|i| (0..p).map(|j| z[j][i] * loadings[j]).sum())
                .collect();
            let lambda = eig.values[c];
            Component {
                loadings,
                eigenvalue: lambda,
                explained_variance_ratio: lambda.max(0.0) / total,
                scores,
                unstable: is_degenerate(&eig.values, c),
            }
        })
        .collect();

    Ok(PcaResult {
        query_ids: panel.query_ids().to_vec(),
        states: panel.states().to_vec(),
        standardization: Standardization::ZScore,
        components,
    })
}

/// Z-scores each column (sample standard deviation).
fn standardize(columns: &[Vec<f64>], ids: &[String]) -> Result<Vec<Vec<f64>>, AnalyticsError> {
    columns
        .iter()
        .zip(ids)
        .map(|(col, id)| {
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let ss: f64 = col.iter().map(|x| (x - mean) * (x - mean)).sum();
            if ss == 0.0 {
                return Err(AnalyticsError::ConstantColumn(id.clone()));
            }
            let sd = (ss / (n - 1.0)).sqrt();
            Ok(col.iter().map(|x| (x - mean) / sd).collect())
        })
        .collect()
}

/// Magnitudes this close to the largest count as ties for orientation, so
/// rounding noise cannot pick a different query between runs.
const ORIENT_TIE: f64 = 1e-9;

fn orient(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let best = v.iter().position(|x| x.abs() >= max - ORIENT_TIE).unwrap_or(0);
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn is_degenerate(values: &[f64], c: usize) -> bool {
    let close = |a: f64, b: f64| (a - b).abs() <= DEGENERATE_GAP * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    (c > 0 && close(values[c - 1], values[c])) || (c + 1 < values.len() && close(values[c], values[c + 1]))
}

impl PcaResult {
    pub fn component(&self, index: usize) -> Result<&Component, AnalyticsError> {
        self.components.get(index).ok_or(AnalyticsError::BadIndex {
            index,
            available: self.components.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::DateWindow;

    fn panel(columns: &[Vec<f64>]) -> StatePanel {
        let window: DateWindow = "2020-03-01..2020-04-15".parse().unwrap();
        let n = columns[0].len();
        let states = (0..n).map(|i| format!("S{i}")).collect();
        let ids = (0..columns.len()).map(|j| format!("q{j}")).collect();
        let cols: Vec<Vec<Option<f64>>> = columns.iter().map(|c| c.iter().copied().map(Some).collect()).collect();
        StatePanel::from_columns(window, states, ids, &cols).unwrap()
    }

    #[test]
    fn perfectly_correlated_columns_rank_one() {
        let p = panel(&[vec![1.0, 2.0, 3.0, 7.0], vec![2.0, 4.0, 6.0, 14.0]]);
        let r = pca(&p, 1).unwrap();
        assert!((r.components[0].explained_variance_ratio - 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for l in &r.components[0].loadings {
            assert!((l - h).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let p = panel(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]);
        assert_eq!(pca(&p, 1), Err(AnalyticsError::ConstantColumn("q1".into())));
        let p = panel(&[vec![1.0, 2.0, 3.0], vec![5.0, 1.0, 5.0], vec![0.0, 1.0, 9.0]]);
        assert_eq!(pca(&p, 3), Err(AnalyticsError::KTooLarge { requested: 3, max: 2 }));
        assert_eq!(pca(&p, 0), Err(AnalyticsError::ZeroComponents));
        let cols = vec![vec![Some(1.0), None], vec![Some(1.0), Some(2.0)]];
        let missing = StatePanel::from_columns(
            "2020-03".parse().unwrap(),
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            &cols,
        )
        .unwrap();
        assert_eq!(pca(&missing, 1), Err(AnalyticsError::MissingCells));
    }

    #[test]
    fn sign_convention_and_ratios() {
        let p = panel(&[
            vec![1.0, 5.0, 3.0, 8.0, 2.0],
            vec![9.0, 2.0, 4.0, 1.0, 7.0],
            vec![3.0, 3.0, 9.0, 4.0, 1.0],
        ]);
        let r = pca(&p, 3).unwrap();
        for c in &r.components {
            let max = c.loadings.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(max > 0.0);
        }
        let sum: f64 = r.components.iter().map(|c| c.explained_variance_ratio).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(r.components.windows(2).all(|w| w[0].explained_variance_ratio >= w[1].explained_variance_ratio));
    }

    #[test]
    fn degenerate_eigenvalues_flagged() {
        // Uncorrelated, equal-variance columns: correlation matrix is I.
        let p = panel(&[vec![1.0, 0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0, 0.0]]);
        let r = pca(&p, 2).unwrap();
        assert!(r.components.iter().all(|c| c.unstable));
    }
}

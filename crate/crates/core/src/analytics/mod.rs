//! State-level and national statistics: period change, missing-query
//! elimination, pairwise-complete correlation, PCA typologies.

mod change;
mod correlation;
mod interpret;
mod pca;

pub use change::{percent_change, percent_change_values, ChangeOutcome, PercentChange};
pub use correlation::{
    classify_band, drop_incomplete_queries, pearson_matrix, Band, CorrelationMatrix, MissingPolicy,
};
pub use interpret::{interpret_component, ComponentInterpretation, DEFAULT_N_TOP, DEFAULT_THRESHOLD};
pub use pca::{pca, Component, PcaResult, Standardization};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("the {0} window contains no points")]
    EmptyWindow(&'static str),
    #[error("every query has missing values; nothing left to analyze")]
    AllQueriesDropped,
    #[error("panel has {0} states; at least 2 are required")]
    TooFewStates(usize),
    #[error("correlation {0} is outside [-1, 1]")]
    OutOfRange(f64),
    #[error("query `{0}` is constant across states")]
    ConstantColumn(String),
    #[error("requested {requested} components but at most {max} are available")]
    KTooLarge { requested: usize, max: usize },
    #[error("at least one component must be requested")]
    ZeroComponents,
    #[error("panel has missing cells; drop incomplete queries first")]
    MissingCells,
    #[error("component {index} does not exist ({available} available)")]
    BadIndex { index: usize, available: usize },
}

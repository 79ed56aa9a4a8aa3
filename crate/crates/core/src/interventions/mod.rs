//! Preprocessing fairness interventions: instance reweighing, quantile
//! repair of numeric features, and fair feature selection.

mod repair;
mod reweigh;
mod selection;

pub use repair::{apply_repair, fit_repairer, FeatureRepair, RepairModel, DEFAULT_GRID_SIZE};
pub use reweigh::{reweigh, reweigh_with_lambda};
pub use selection::{
    average_ranks, f_statistic, fair_feature_select, feature_scores, mutual_information,
    FeatureScores, RankWeights, SelectionRanks,
};

/// True when every value is 0 or 1; such columns are treated as indicators.
pub(crate) fn is_indicator<'a>(values: impl IntoIterator<Item = &'a f64>) -> bool {
    values.into_iter().all(|&v| v == 0.0 || v == 1.0)
}

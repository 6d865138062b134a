//! Evaluation statistics and model explanations.

mod eval;
mod explain;

pub use eval::{
    bootstrap_ci, classification_metrics, confusion, mcnemar, mcnemar_from_counts,
    quantile_sorted, resample_indices, ConfusionMatrix, McNemarMethod, McNemarResult, Metric,
    Scores, MCNEMAR_EXACT_BELOW,
};
pub use explain::{
    impurity_importance, permutation_importance, shapley_direction_summary, shapley_mc,
    FeatureImportance, ImportanceReport, Scorer,
};

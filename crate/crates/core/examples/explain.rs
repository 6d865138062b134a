//! Explain a gradient-boosted model three ways: impurity importance,
//! permutation importance and Monte-Carlo Shapley values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resfault::analysis::{
    impurity_importance, permutation_importance, shapley_direction_summary, FeatureImportance,
    ImportanceReport, Metric,
};
use resfault::learners::{train_gbt, BoostConfig, FeatureMatrix, Model};

fn main() -> resfault::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let names = ["CC", "LOC", "HVOL", "TC", "AGE", "noise"];
    let rows: Vec<Vec<f64>> = (0..800)
        .map(|_| (0..names.len()).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    // residual faults here depend on complexity and churn, not on age
    let labels: Vec<u8> = rows
        .iter()
        .map(|r| (1.5 * r[0] + r[3] - 0.5 * r[1] + 0.2 * rng.random_range(-1.0..1.0) > 0.9) as u8)
        .collect();
    let columns: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let train = FeatureMatrix::new(columns.clone(), rows[..600].to_vec(), Some(labels[..600].to_vec()))?;
    let test = FeatureMatrix::new(columns, rows[600..].to_vec(), Some(labels[600..].to_vec()))?;
    let model = Model::GradientBoosting(train_gbt(&train, &BoostConfig::default())?);

    let impurity = impurity_importance(&model)?;
    let perm = permutation_importance(&model, &test, Metric::F1, 1, 5)?;
    let background = train.select(&(0..50).collect::<Vec<_>>());
    let shap = shapley_direction_summary(&model, &test.select(&(0..40).collect::<Vec<_>>()), &background, 200, 1)?;
    let features = names
        .iter()
        .enumerate()
        .map(|(j, name)| FeatureImportance {
            feature: name.to_string(),
            impurity_importance: Some(impurity[j]),
            permutation_drop: perm[j],
            shapley_mean: shap[j],
        })
        .collect();
    print!("{}", ImportanceReport::new(model.kind(), features).to_text(names.len()));
    Ok(())
}

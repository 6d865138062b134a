//! Fit all four model families on a synthetic problem and compare them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resfault::analysis::{classification_metrics, confusion};
use resfault::learners::{
    apply_scaler, fit_isolation_forest, fit_lof, fit_scaler, train_gbt, train_random_forest,
    BoostConfig, FeatureMatrix, ForestConfig, IsolationConfig, Model, ModelFile,
};

fn data(n: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<u8>) {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    // class 1 is the rare, shifted one
    let labels = rows.iter().map(|r| (r[0] + r[1] > 1.0) as u8).collect();
    (rows, labels)
}

fn main() -> resfault::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let columns: Vec<String> = (0..6).map(|j| format!("m{j}")).collect();
    let (rows, y) = data(1200, &mut rng);
    let train = FeatureMatrix::new(columns.clone(), rows[..900].to_vec(), Some(y[..900].to_vec()))?;
    let test = FeatureMatrix::new(columns.clone(), rows[900..].to_vec(), Some(y[900..].to_vec()))?;

    let scaler = fit_scaler(&train)?;
    let train_s = apply_scaler(&scaler, &train)?;
    let models = vec![
        Model::RandomForest(train_random_forest(&train_s, &ForestConfig { n_trees: 100, ..Default::default() })?),
        Model::GradientBoosting(train_gbt(&train_s, &BoostConfig::default())?),
        Model::IsolationForest(fit_isolation_forest(&train_s, &IsolationConfig { contamination: 0.15, ..Default::default() })?),
        Model::LocalOutlierFactor(fit_lof(&train_s, 20)?),
    ];
    println!("{:<22} {:>8} {:>9} {:>7} {:>6}", "model", "accuracy", "precision", "recall", "f1");
    for model in models {
        // the model file carries the scaler and applies it to raw rows
        let file = ModelFile::new(model, &columns, Some(scaler.clone()), 1);
        let preds = file.predict(&test, 0.5)?;
        let s = classification_metrics(&confusion(&preds, test.labels().unwrap())?);
        println!(
            "{:<22} {:>8.3} {:>9.3} {:>7.3} {:>6.3}",
            file.model.kind(),
            s.accuracy,
            s.precision,
            s.recall,
            s.f1
        );
    }
    Ok(())
}

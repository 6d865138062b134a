mod common;

use common::{blob_with_outlier, must, separable_data};
use resfault::learners::{
    apply_scaler, fit_isolation_forest, fit_scaler, train_random_forest, FeatureMatrix, ForestConfig,
    IsolationConfig, Model, ModelFile,
};

fn matrix(rows: Vec<Vec<f64>>, labels: Option<Vec<u8>>) -> FeatureMatrix {
    let d = rows[0].len();
    FeatureMatrix::new((0..d).map(|j| format!("x{j}")).collect(), rows, labels).unwrap()
}

#[test]
fn separable_data_and_planted_outlier() {
    must(common::check_learners());
}

#[test]
fn model_file_round_trips() {
    let (rows, labels) = separable_data(300, 4, 1);
    let x = matrix(rows, Some(labels));
    let rf = train_random_forest(&x, &ForestConfig { n_trees: 10, ..ForestConfig::default() }).unwrap();
    let file = ModelFile::new(Model::RandomForest(rf), x.columns(), None, 42).with_config_hash("abc");
    let json = file.to_json().unwrap();
    let back = ModelFile::from_json(&json).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.to_json().unwrap(), json);
}

#[test]
fn schema_mismatch_is_rejected() {
    let (rows, labels) = separable_data(200, 4, 2);
    let x = matrix(rows.clone(), Some(labels));
    let rf = train_random_forest(&x, &ForestConfig { n_trees: 5, ..ForestConfig::default() }).unwrap();
    let file = ModelFile::new(Model::RandomForest(rf), x.columns(), None, 42);
    let narrow = matrix(rows.iter().map(|r| r[..3].to_vec()).collect(), None);
    assert!(file.predict_proba(&narrow).is_err());
}

#[test]
fn single_class_training_fails() {
    let x = matrix(vec![vec![0.0], vec![1.0], vec![2.0]], Some(vec![1, 1, 1]));
    assert!(train_random_forest(&x, &ForestConfig::default()).is_err());
}

#[test]
fn scaler_uses_training_statistics() {
    let train = matrix(vec![vec![1.0, 5.0], vec![3.0, 5.0]], None);
    let params = fit_scaler(&train).unwrap();
    assert_eq!(params.constant_columns(), vec![1]);
    let scaled = apply_scaler(&params, &matrix(vec![vec![2.0, 7.0]], None)).unwrap();
    assert!(scaled.get(0, 0).abs() < 1e-12);
}

#[test]
fn isolation_scores_are_probabilities_and_deterministic() {
    let x = matrix(blob_with_outlier(), None);
    let cfg = IsolationConfig { seed: 3, ..IsolationConfig::default() };
    let a = fit_isolation_forest(&x, &cfg).unwrap();
    let b = fit_isolation_forest(&x, &cfg).unwrap();
    assert_eq!(a, b);
    for r in x.rows() {
        let s = a.anomaly_score(r);
        assert!(s > 0.0 && s < 1.0);
    }
    assert!(a.is_anomaly(x.row(200)));
}

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    bootstrap_ci, classification_metrics, confusion, impurity_importance, mcnemar,
    permutation_importance, shapley_direction_summary, ConfusionMatrix, FeatureImportance,
    ImportanceReport, McNemarResult, Metric, Scores,
};
use crate::error::{Error, Result};
use crate::learners::{
    fit_isolation_forest, fit_lof, fit_scaler, apply_scaler, train_gbt, train_random_forest,
    stream_rng, FeatureMatrix, Model, ModelFile,
};
use crate::repr::{orthogonality_report, IdMatrix, ProjectionPoint, ReprReport};

use super::config::PipelineConfig;
use super::dataset::Dataset;
use super::io::{Provenance, Table};

/// Fit the scaler on the training split and train every model family on
/// the scaled rows. Anomaly detectors see all training rows, labels unused.
pub fn train_models(train: &Dataset, cfg: &PipelineConfig) -> Result<Vec<ModelFile>> {
    let x = train.feature_matrix()?;
    let scaler = fit_scaler(&x)?;
    let xs = apply_scaler(&scaler, &x)?;
    let models = vec![
        Model::RandomForest(train_random_forest(&xs, &cfg.forest())?),
        Model::GradientBoosting(train_gbt(&xs, &cfg.boost())?),
        Model::IsolationForest(fit_isolation_forest(&xs, &cfg.isolation())?),
        Model::LocalOutlierFactor(fit_lof(&xs, cfg.models.local_outlier_factor.k)?),
    ];
    let hash = cfg.hash();
    Ok(models
        .into_iter()
        .map(|m| ModelFile::new(m, x.columns(), Some(scaler.clone()), cfg.seed).with_config_hash(&hash))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    pub model: String,
    pub confusion: ConfusionMatrix,
    pub scores: Scores,
    /// Percentile bootstrap interval per metric; absent with fewer than two
    /// test rows.
    pub ci: Option<BTreeMap<String, (f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub provenance: Provenance,
    pub test_rows: usize,
    pub bootstrap: usize,
    pub level: f64,
    pub models: Vec<ModelEval>,
}

impl EvalReport {
    /// One row per model, each score with its interval underneath as a
    /// `[low, high]` suffix.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<22} {:>22} {:>22} {:>22} {:>22}\n",
            "model", "accuracy", "precision", "recall", "f1"
        );
        for m in &self.models {
            let cell = |metric: Metric, v: f64| match &m.ci {
                Some(ci) => {
                    let (lo, hi) = ci[metric.name()];
                    format!("{v:.3} [{lo:.3},{hi:.3}]")
                }
                None => format!("{v:.3}"),
            };
            out.push_str(&format!(
                "{:<22} {:>22} {:>22} {:>22} {:>22}\n",
                m.model,
                cell(Metric::Accuracy, m.scores.accuracy),
                cell(Metric::Precision, m.scores.precision),
                cell(Metric::Recall, m.scores.recall),
                cell(Metric::F1, m.scores.f1),
            ));
        }
        out
    }
}

fn labeled(test: &Dataset) -> Result<(FeatureMatrix, Vec<u8>, Vec<String>)> {
    let x = test.feature_matrix()?;
    let y = x.labels().unwrap_or(&[]).to_vec();
    let ids = test.rows.iter().filter(|r| r.label >= 0).map(|r| r.id()).collect();
    Ok((x, y, ids))
}

/// Predictions of every model on the test split plus the evaluation report.
pub fn evaluate_models(
    models: &[ModelFile],
    test: &Dataset,
    cfg: &PipelineConfig,
    prov: &Provenance,
) -> Result<(EvalReport, Table)> {
    let (x, y, ids) = labeled(test)?;
    if y.is_empty() {
        return Err(Error::input("test split has no labeled rows"));
    }
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend(models.iter().map(|m| m.header.model_type.clone()));
    let mut table = Table::new(header);
    table.provenance = Some(prov.clone());
    let mut columns = Vec::new();
    let mut evals = Vec::new();
    for m in models {
        let preds = m.predict(&x, cfg.evaluate.threshold)?;
        let cm = confusion(&preds, &y)?;
        let ci = if y.len() >= 2 {
            let mut map = BTreeMap::new();
            for metric in Metric::ALL {
                let interval = bootstrap_ci(&preds, &y, metric, cfg.evaluate.bootstrap, cfg.seed, cfg.evaluate.level)?;
                map.insert(metric.name().to_string(), interval);
            }
            Some(map)
        } else {
            None
        };
        evals.push(ModelEval {
            model: m.header.model_type.clone(),
            confusion: cm,
            scores: classification_metrics(&cm),
            ci,
        });
        columns.push(preds);
    }
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![id.clone(), y[i].to_string()];
        rec.extend(columns.iter().map(|c| c[i].to_string()));
        table.rows.push(rec);
    }
    let report = EvalReport {
        provenance: prov.clone(),
        test_rows: y.len(),
        bootstrap: cfg.evaluate.bootstrap,
        level: cfg.evaluate.level,
        models: evals,
    };
    Ok((report, table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNemarPair {
    pub model_a: String,
    pub model_b: String,
    #[serde(flatten)]
    pub result: McNemarResult,
}

fn prediction_column(table: &Table, name: &str) -> Result<Vec<u8>> {
    let i = table
        .column(name)
        .ok_or_else(|| Error::input(format!("no predictions for model {name:?}")))?;
    table
        .rows
        .iter()
        .map(|r| match r[i].as_str() {
            "0" => Ok(0),
            "1" => Ok(1),
            v => Err(Error::input(format!("bad prediction {v:?}"))),
        })
        .collect()
}

/// McNemar's test for one pair of models in a predictions table.
pub fn mcnemar_pair(predictions: &Table, a: &str, b: &str) -> Result<McNemarPair> {
    let y = prediction_column(predictions, "label")?;
    let pa = prediction_column(predictions, a)?;
    let pb = prediction_column(predictions, b)?;
    Ok(McNemarPair {
        model_a: a.to_string(),
        model_b: b.to_string(),
        result: mcnemar(&pa, &pb, &y)?,
    })
}

/// Every unordered pair of models, in column order.
pub fn mcnemar_all(predictions: &Table) -> Result<Vec<McNemarPair>> {
    let models: Vec<&String> = predictions.header.iter().skip(2).collect();
    let mut out = Vec::new();
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            out.push(mcnemar_pair(predictions, models[i], models[j])?);
        }
    }
    Ok(out)
}

/// Importance report of a supervised model: impurity weights, permutation
/// F1 drop on the test split, and mean signed Shapley values over test rows
/// against a seeded sample of training rows.
pub fn explain_model(
    model: &ModelFile,
    train: &Dataset,
    test: &Dataset,
    cfg: &PipelineConfig,
) -> Result<ImportanceReport> {
    if !model.model.is_supervised() {
        return Err(Error::input(format!("{} has no explanation report", model.header.model_type)));
    }
    let xtr = train.feature_matrix()?;
    let (xte, _, _) = labeled(test)?;
    if xte.n_rows() == 0 {
        return Err(Error::input("test split has no labeled rows"));
    }
    model.check_schema(&xte)?;
    let impurity = impurity_importance(&model.model)?;
    let perm = permutation_importance(model, &xte, Metric::F1, cfg.seed, cfg.explain.permutation_repeats)?;
    let mut idx: Vec<usize> = (0..xtr.n_rows()).collect();
    idx.shuffle(&mut stream_rng(cfg.seed, u64::MAX));
    idx.truncate(cfg.explain.background.max(1));
    idx.sort_unstable();
    let background = xtr.select(&idx);
    let shap = shapley_direction_summary(
        model,
        &xte,
        &background,
        cfg.explain.shapley_samples,
        cfg.seed,
    )?;
    let features = xte
        .columns()
        .iter()
        .enumerate()
        .map(|(j, name)| FeatureImportance {
            feature: name.clone(),
            impurity_importance: Some(impurity[j]),
            permutation_drop: perm[j],
            shapley_mean: shap[j],
        })
        .collect();
    Ok(ImportanceReport::new(&model.header.model_type, features))
}

/// Compare the dataset's metric space with an embedding file.
pub fn repr_analysis(
    dataset: &Dataset,
    embeddings: &Path,
    variance_threshold: f64,
) -> Result<(ReprReport, Vec<ProjectionPoint>)> {
    let metrics = IdMatrix::new(
        dataset.rows.iter().map(|r| r.id()).collect(),
        crate::catalog::feature_columns().iter().map(|s| s.to_string()).collect(),
        dataset.rows.iter().map(|r| r.features.clone()).collect(),
    )?;
    let emb = IdMatrix::read_csv(embeddings)?;
    orthogonality_report(&metrics, &emb, variance_threshold)
}

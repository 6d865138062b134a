//! Feature scaling, tree ensembles and anomaly detectors.
//!
//! Every learner is a deterministic function of its data, configuration and
//! seed. Randomised parts draw from per-tree ChaCha streams, so parallel
//! training gives the same result as sequential training.

mod boost;
mod forest;
mod isolation;
mod lof;
mod matrix;
mod scaler;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use boost::{sigmoid, train_gbt, BoostConfig, BoostedModel};
pub use forest::{train_random_forest, ForestConfig, ForestModel};
pub use forest::stream_rng;
pub use isolation::{average_path, fit_isolation_forest, IsolationConfig, IsolationModel};
pub use lof::{fit_lof, LofModel, DEFAULT_LOF_THRESHOLD};
pub use matrix::{schema_hash, FeatureMatrix};
pub use scaler::{apply_scaler, fit_scaler, ScalerParams};

/// A trained model of any supported family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "model", rename_all = "snake_case")]
pub enum Model {
    RandomForest(ForestModel),
    GradientBoosting(BoostedModel),
    IsolationForest(IsolationModel),
    LocalOutlierFactor(LofModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::RandomForest(_) => "random_forest",
            Model::GradientBoosting(_) => "gradient_boosting",
            Model::IsolationForest(_) => "isolation_forest",
            Model::LocalOutlierFactor(_) => "local_outlier_factor",
        }
    }

    /// Supervised models output P(residual); anomaly detectors output their
    /// raw anomaly score (isolation score in (0,1), or the LOF ratio).
    pub fn score_row(&self, x: &[f64]) -> f64 {
        match self {
            Model::RandomForest(m) => m.predict_proba_row(x),
            Model::GradientBoosting(m) => m.predict_proba_row(x),
            Model::IsolationForest(m) => m.anomaly_score(x),
            Model::LocalOutlierFactor(m) => m.lof_score(x),
        }
    }

    /// Positive class: residual for classifiers, anomalous for detectors.
    pub fn decide(&self, score: f64, threshold: f64) -> u8 {
        match self {
            Model::RandomForest(_) | Model::GradientBoosting(_) => (score >= threshold) as u8,
            Model::IsolationForest(m) => (score >= m.threshold) as u8,
            Model::LocalOutlierFactor(m) => (score > m.threshold) as u8,
        }
    }

    pub fn is_supervised(&self) -> bool {
        matches!(self, Model::RandomForest(_) | Model::GradientBoosting(_))
    }

    /// Built-in importances where the family has them.
    pub fn importances(&self) -> Option<&[f64]> {
        match self {
            Model::RandomForest(m) => Some(&m.importances),
            Model::GradientBoosting(m) => Some(&m.importances),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format: String,
    pub model_type: String,
    pub schema_hash: String,
    pub columns: Vec<String>,
    pub seed: u64,
    /// Hash of the pipeline configuration that produced the model.
    #[serde(default)]
    pub config_hash: String,
    pub tool_version: String,
}

/// A model file: header, the scaler fitted on the training split, and the
/// model body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub header: ModelHeader,
    pub scaler: Option<ScalerParams>,
    #[serde(flatten)]
    pub model: Model,
}

pub const MODEL_FORMAT: &str = "resfault-model/1";

impl ModelFile {
    pub fn new(model: Model, columns: &[String], scaler: Option<ScalerParams>, seed: u64) -> Self {
        ModelFile {
            header: ModelHeader {
                format: MODEL_FORMAT.to_string(),
                model_type: model.kind().to_string(),
                schema_hash: schema_hash(columns),
                columns: columns.to_vec(),
                seed,
                config_hash: String::new(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            scaler,
            model,
        }
    }

    pub fn with_config_hash(mut self, hash: &str) -> Self {
        self.header.config_hash = hash.to_string();
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.header.format != MODEL_FORMAT {
            return Err(Error::Schema(format!(
                "unsupported model format {:?}",
                file.header.format
            )));
        }
        Ok(file)
    }

    pub fn check_schema(&self, x: &FeatureMatrix) -> Result<()> {
        if x.schema_hash() != self.header.schema_hash {
            return Err(Error::Schema(format!(
                "model expects {} columns with schema {}, got {} columns with schema {}",
                self.header.columns.len(),
                self.header.schema_hash,
                x.n_cols(),
                x.schema_hash()
            )));
        }
        Ok(())
    }

    fn prepared(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_schema(x)?;
        match &self.scaler {
            Some(s) => apply_scaler(s, x),
            None => Ok(x.clone()),
        }
    }

    /// Per-row scores; see [`Model::score_row`].
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        let x = self.prepared(x)?;
        Ok(x.rows().map(|r| self.model.score_row(r)).collect())
    }

    pub fn predict(&self, x: &FeatureMatrix, threshold: f64) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|s| self.model.decide(s, threshold))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_file_roundtrip_and_schema_check() {
        let x = FeatureMatrix::from_rows(
            vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 1.0], vec![3.0, 0.0]],
            Some(vec![0, 0, 1, 1]),
        )
        .unwrap();
        let scaler = fit_scaler(&x).unwrap();
        let z = apply_scaler(&scaler, &x).unwrap();
        let forest = train_random_forest(
            &z,
            &ForestConfig {
                n_trees: 5,
                min_leaf: 1,
                ..ForestConfig::default()
            },
        )
        .unwrap();
        let file = ModelFile::new(Model::RandomForest(forest), x.columns(), Some(scaler), 42);
        let text = file.to_json().unwrap();
        let back = ModelFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.predict_proba(&x).unwrap().len(), 4);

        let other = FeatureMatrix::new(vec!["a".into(), "b".into()], vec![vec![0.0, 0.0]], None).unwrap();
        assert!(matches!(back.predict(&other, 0.5), Err(Error::Schema(_))));
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{GiniBuilder, GiniParams, Tree};
use super::FeatureMatrix;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// `None` means `floor(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 300,
            max_depth: None,
            min_leaf: 2,
            features_per_split: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Mean decrease in impurity per feature, normalised to sum to 1.
    pub importances: Vec<f64>,
}

/// ChaCha8 generator for task `stream` of `seed`: one tree, resample or
/// permutation each.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn train_random_forest(x: &FeatureMatrix, config: &ForestConfig) -> Result<ForestModel> {
    let y = x.require_both_classes()?;
    let n = x.n_rows();
    let d = x.n_cols();
    let per_split = config
        .features_per_split
        .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1));
    let params = GiniParams {
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
        features_per_split: Some(per_split),
    };
    let grown: Vec<(Tree, Vec<(usize, f64)>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(config.seed, t as u64);
            let idx: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            GiniBuilder::new(x, y, params, &mut rng).build(idx)
        })
        .collect();
    let mut importances = vec![0.0; d];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, gains) in grown {
        tree.add_importance(&gains, &mut importances);
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }
    Ok(ForestModel {
        config: config.clone(),
        n_features: d,
        trees,
        importances,
    })
}

impl ForestModel {
    /// Mean of the trees' leaf positive fractions.
    pub fn predict_proba_row(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let v = i as f64;
            rows.push(vec![v, (i % 7) as f64]);
            y.push((i >= 20) as u8);
        }
        FeatureMatrix::from_rows(rows, Some(y)).unwrap()
    }

    #[test]
    fn fits_separable_data() {
        let x = separable();
        let cfg = ForestConfig {
            n_trees: 25,
            min_leaf: 1,
            features_per_split: Some(2),
            ..ForestConfig::default()
        };
        let m = train_random_forest(&x, &cfg).unwrap();
        for (i, row) in x.rows().enumerate() {
            let p = m.predict_proba_row(row);
            assert!((0.0..=1.0).contains(&p));
            assert_eq!((p >= 0.5) as u8, x.labels().unwrap()[i]);
        }
        assert!((m.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(m.importances[0] > m.importances[1]);
    }

    #[test]
    fn deterministic() {
        let x = separable();
        let cfg = ForestConfig {
            n_trees: 10,
            ..ForestConfig::default()
        };
        let a = serde_json::to_string(&train_random_forest(&x, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&train_random_forest(&x, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let x = FeatureMatrix::from_rows(vec![vec![1.0], vec![2.0]], Some(vec![1, 1])).unwrap();
        assert!(train_random_forest(&x, &ForestConfig::default()).is_err());
    }
}

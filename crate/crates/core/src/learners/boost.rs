use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::forest::stream_rng;
use super::tree::{build_newton, NewtonParams, Tree};
use super::FeatureMatrix;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
    /// Fraction of rows drawn (without replacement) per round.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 4,
            lambda: 1.0,
            min_child_weight: 1e-3,
            subsample: 1.0,
            seed: 42,
        }
    }
}

/// Gradient-boosted trees on logistic loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub config: BoostConfig,
    pub n_features: usize,
    /// Prior log-odds of the positive class.
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Mean training log-loss after each round (index 0 is the prior alone).
    pub train_loss: Vec<f64>,
    /// Total split gain per feature, normalised to sum to 1.
    pub importances: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn log_loss(y: &[u8], margin: &[f64]) -> f64 {
    let n = y.len() as f64;
    y.iter()
        .zip(margin)
        .map(|(&yi, &m)| {
            // log(1 + e^m) - y m, computed stably
            let softplus = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
            softplus - yi as f64 * m
        })
        .sum::<f64>()
        / n
}

pub fn train_gbt(x: &FeatureMatrix, config: &BoostConfig) -> Result<BoostedModel> {
    let y = x.require_both_classes()?;
    let n = x.n_rows();
    let d = x.n_cols();
    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    let prior = pos / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();
    let mut margin = vec![base_score; n];
    let params = NewtonParams {
        max_depth: config.max_depth,
        lambda: config.lambda,
        min_child_weight: config.min_child_weight,
    };
    let features: Vec<usize> = (0..d).collect();
    let mut trees = Vec::with_capacity(config.n_rounds);
    let mut train_loss = vec![log_loss(y, &margin)];
    let mut importances = vec![0.0; d];
    let rows = ((config.subsample.clamp(0.0, 1.0) * n as f64).round() as usize).clamp(1, n);
    for round in 0..config.n_rounds {
        let (g, h): (Vec<f64>, Vec<f64>) = margin
            .iter()
            .zip(y)
            .map(|(&m, &yi)| {
                let p = sigmoid(m);
                (p - yi as f64, (p * (1.0 - p)).max(1e-16))
            })
            .unzip();
        let idx: Vec<usize> = if rows == n {
            (0..n).collect()
        } else {
            let mut rng = stream_rng(config.seed, round as u64);
            let mut s = sample(&mut rng, n, rows).into_vec();
            s.sort_unstable();
            s
        };
        let (tree, gains) = build_newton(x, &g, &h, params, &features, idx);
        for (f, gain) in gains {
            importances[f] += gain;
        }
        for (i, m) in margin.iter_mut().enumerate() {
            *m += config.learning_rate * tree.predict(x.row(i));
        }
        train_loss.push(log_loss(y, &margin));
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }
    Ok(BoostedModel {
        config: config.clone(),
        n_features: d,
        base_score,
        trees,
        train_loss,
        importances,
    })
}

impl BoostedModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.base_score
            + self.config.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict_proba_row(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y: Vec<u8> = (0..30).map(|i| (i % 3 == 0 || i > 24) as u8).collect();
        FeatureMatrix::from_rows(rows, Some(y)).unwrap()
    }

    #[test]
    fn depth_zero_predicts_prior() {
        let x = toy();
        let cfg = BoostConfig {
            n_rounds: 1,
            learning_rate: 1.0,
            max_depth: 0,
            ..BoostConfig::default()
        };
        let m = train_gbt(&x, &cfg).unwrap();
        let pos = x.labels().unwrap().iter().filter(|&&v| v == 1).count() as f64;
        let prior = pos / 30.0;
        for row in x.rows() {
            assert!((m.margin(row) - (prior / (1.0 - prior)).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_decreases() {
        let m = train_gbt(&toy(), &BoostConfig { n_rounds: 30, ..BoostConfig::default() }).unwrap();
        for w in m.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", m.train_loss);
        }
        assert!(m.train_loss.last().unwrap() < &m.train_loss[0]);
    }
}

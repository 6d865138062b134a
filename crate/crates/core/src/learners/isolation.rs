use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::stream_rng;
use super::FeatureMatrix;
use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationConfig {
    pub n_trees: usize,
    /// Rows per tree; clamped to the number of training rows.
    pub subsample: usize,
    /// Expected anomaly share; sets the decision threshold.
    pub contamination: f64,
    pub seed: u64,
}

impl Default for IsolationConfig {
    fn default() -> Self {
        IsolationConfig {
            n_trees: 100,
            subsample: 256,
            contamination: 0.5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum INode {
    Leaf {
        size: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationTree {
    pub nodes: Vec<INode>,
}

impl IsolationTree {
    fn path_length(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[at] {
                INode::Leaf { size } => return depth + average_path(size),
                INode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[feature] < threshold { left } else { right };
                    depth += 1.0;
                }
            }
        }
    }
}

/// Average unsuccessful-search path length in a binary search tree of `n`
/// nodes: `2 H(n-1) - 2 (n-1) / n`.
pub fn average_path(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = (n - 1) as f64;
            2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationModel {
    pub config: IsolationConfig,
    pub n_features: usize,
    /// Effective subsample size.
    pub psi: usize,
    pub trees: Vec<IsolationTree>,
    /// Scores at or above this are anomalies.
    pub threshold: f64,
}

fn grow(
    x: &FeatureMatrix,
    idx: &[usize],
    depth: usize,
    limit: usize,
    rng: &mut impl Rng,
    nodes: &mut Vec<INode>,
) -> usize {
    let at = nodes.len();
    nodes.push(INode::Leaf { size: idx.len() });
    if idx.len() <= 1 || depth >= limit {
        return at;
    }
    // features that still vary in this node
    let d = x.n_cols();
    let varying: Vec<(usize, f64, f64)> = (0..d)
        .filter_map(|f| {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(x.get(i, f)), hi.max(x.get(i, f)))
            });
            (hi > lo).then_some((f, lo, hi))
        })
        .collect();
    if varying.is_empty() {
        return at;
    }
    let (feature, lo, hi) = varying[rng.random_range(0..varying.len())];
    let mut threshold = rng.random_range(lo..hi);
    if threshold <= lo {
        threshold = lo + (hi - lo) / 2.0;
    }
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x.get(i, feature) < threshold);
    let left = grow(x, &l, depth + 1, limit, rng, nodes);
    let right = grow(x, &r, depth + 1, limit, rng, nodes);
    nodes[at] = INode::Split {
        feature,
        threshold,
        left,
        right,
    };
    at
}

pub fn fit_isolation_forest(x: &FeatureMatrix, config: &IsolationConfig) -> Result<IsolationModel> {
    let n = x.n_rows();
    if n == 0 {
        return Err(Error::input("isolation forest needs at least one row"));
    }
    if !(0.0..=1.0).contains(&config.contamination) {
        return Err(Error::input("contamination must be in [0, 1]"));
    }
    let psi = config.subsample.clamp(1, n);
    let limit = (psi as f64).log2().ceil().max(1.0) as usize;
    let trees: Vec<IsolationTree> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(config.seed, t as u64);
            let mut idx = sample(&mut rng, n, psi).into_vec();
            idx.sort_unstable();
            let mut nodes = Vec::new();
            grow(x, &idx, 0, limit, &mut rng, &mut nodes);
            IsolationTree { nodes }
        })
        .collect();
    let mut model = IsolationModel {
        config: config.clone(),
        n_features: x.n_cols(),
        psi,
        trees,
        threshold: 0.5,
    };
    let mut scores: Vec<f64> = x.rows().map(|r| model.anomaly_score(r)).collect();
    scores.sort_by(f64::total_cmp);
    // the top `contamination` share of training scores is anomalous
    let q = 1.0 - config.contamination;
    model.threshold = crate::analysis::quantile_sorted(&scores, q);
    Ok(model)
}

impl IsolationModel {
    /// `2^(-E[h(x)] / c(psi))`, in (0, 1).
    pub fn anomaly_score(&self, x: &[f64]) -> f64 {
        let c = average_path(self.psi);
        if c == 0.0 || self.trees.is_empty() {
            return 0.5;
        }
        let mean = self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len() as f64;
        2f64.powf(-mean / c)
    }

    pub fn is_anomaly(&self, x: &[f64]) -> bool {
        self.anomaly_score(x) >= self.threshold
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_path_values() {
        assert_eq!(average_path(1), 0.0);
        assert_eq!(average_path(2), 1.0);
        let c256 = 2.0 * ((255f64).ln() + EULER_GAMMA) - 2.0 * 255.0 / 256.0;
        assert!((average_path(256) - c256).abs() < 1e-12);
    }

    #[test]
    fn outlier_scores_highest() {
        let mut rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i % 8) as f64 * 0.1, (i / 8) as f64 * 0.1])
            .collect();
        rows.push(vec![25.0, -30.0]);
        let x = FeatureMatrix::from_rows(rows, None).unwrap();
        let m = fit_isolation_forest(&x, &IsolationConfig::default()).unwrap();
        let scores: Vec<f64> = x.rows().map(|r| m.anomaly_score(r)).collect();
        let top = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(top, 60);
        assert!(scores.iter().all(|&s| s > 0.0 && s < 1.0));
    }
}

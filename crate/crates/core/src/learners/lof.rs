use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Reachability distances below this are treated as this, so duplicate
/// points give large but finite densities.
const MIN_REACH: f64 = 1e-10;

/// Scores above this mark an outlier.
pub const DEFAULT_LOF_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LofModel {
    pub k: usize,
    pub threshold: f64,
    pub points: Vec<Vec<f64>>,
    /// Distance from each training point to its k-th nearest other point.
    pub k_distance: Vec<f64>,
    /// Local reachability density of each training point.
    pub lrd: Vec<f64>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// The k nearest training points to `x` as (index, distance), ties broken by
/// index. `skip` excludes one training index (the point itself).
fn neighbours(points: &[Vec<f64>], x: &[f64], k: usize, skip: Option<usize>) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, p)| (i, distance(p, x)))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn density(nn: &[(usize, f64)], k_distance: &[f64]) -> f64 {
    let mean_reach = nn
        .iter()
        .map(|&(o, d)| k_distance[o].max(d))
        .sum::<f64>()
        / nn.len() as f64;
    1.0 / mean_reach.max(MIN_REACH)
}

pub fn fit_lof(x: &FeatureMatrix, k: usize) -> Result<LofModel> {
    let n = x.n_rows();
    if k == 0 || k >= n {
        return Err(Error::input(format!("LOF needs 1 <= k < n, got k={k}, n={n}")));
    }
    let points: Vec<Vec<f64>> = x.rows().map(<[f64]>::to_vec).collect();
    let knn: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| neighbours(&points, &points[i], k, Some(i)))
        .collect();
    let k_distance: Vec<f64> = knn.iter().map(|nn| nn.last().unwrap().1).collect();
    let lrd = knn.iter().map(|nn| density(nn, &k_distance)).collect();
    Ok(LofModel {
        k,
        threshold: DEFAULT_LOF_THRESHOLD,
        points,
        k_distance,
        lrd,
    })
}

impl LofModel {
    fn score_with(&self, nn: &[(usize, f64)]) -> f64 {
        let own = density(nn, &self.k_distance);
        nn.iter().map(|&(o, _)| self.lrd[o]).sum::<f64>() / (nn.len() as f64 * own)
    }

    /// LOF of a new point against the training set.
    pub fn lof_score(&self, x: &[f64]) -> f64 {
        self.score_with(&neighbours(&self.points, x, self.k, None))
    }

    /// LOF of training point `i`, excluding itself from its neighbourhood.
    pub fn training_score(&self, i: usize) -> f64 {
        self.score_with(&neighbours(&self.points, &self.points[i], self.k, Some(i)))
    }

    pub fn is_outlier(&self, x: &[f64]) -> bool {
        self.lof_score(x) > self.threshold
    }
}

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{confusion, Metric};
use crate::error::{Error, Result};
use crate::learners::{stream_rng, FeatureMatrix, Model, ModelFile};

/// Anything that maps a feature row to a score.
pub trait Scorer: Sync {
    fn score(&self, x: &[f64]) -> f64;

    fn classify(&self, x: &[f64]) -> u8 {
        (self.score(x) >= 0.5) as u8
    }
}

impl Scorer for Model {
    fn score(&self, x: &[f64]) -> f64 {
        self.score_row(x)
    }

    fn classify(&self, x: &[f64]) -> u8 {
        self.decide(self.score_row(x), 0.5)
    }
}

/// Takes raw (unscaled) rows and applies the stored scaler.
impl Scorer for ModelFile {
    fn score(&self, x: &[f64]) -> f64 {
        match &self.scaler {
            Some(s) => self.model.score_row(&s.transform_row(x)),
            None => self.model.score_row(x),
        }
    }

    fn classify(&self, x: &[f64]) -> u8 {
        self.model.decide(self.score(x), 0.5)
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Scorer for F {
    fn score(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Mean-decrease-in-impurity weights, normalised to sum to 1. A model that
/// never split spreads the weight uniformly.
pub fn impurity_importance(model: &Model) -> Result<Vec<f64>> {
    let raw = model
        .importances()
        .ok_or_else(|| Error::input(format!("{} has no impurity importances", model.kind())))?;
    let total: f64 = raw.iter().sum();
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    if total <= 0.0 {
        return Ok(vec![1.0 / raw.len() as f64; raw.len()]);
    }
    Ok(raw.iter().map(|v| v / total).collect())
}

fn metric_on<S: Scorer + ?Sized>(model: &S, rows: &[Vec<f64>], y: &[u8], metric: Metric) -> f64 {
    let preds: Vec<u8> = rows.iter().map(|r| model.classify(r)).collect();
    metric.of(&confusion(&preds, y).expect("lengths checked"))
}

/// Mean drop of `metric` when one column at a time is shuffled.
/// Repeat `r` of feature `j` shuffles with stream `j * repeats + r`.
pub fn permutation_importance<S: Scorer + ?Sized>(
    model: &S,
    x: &FeatureMatrix,
    metric: Metric,
    seed: u64,
    repeats: usize,
) -> Result<Vec<f64>> {
    let y = x
        .labels()
        .ok_or_else(|| Error::input("permutation importance needs labels"))?;
    let rows: Vec<Vec<f64>> = x.rows().map(|r| r.to_vec()).collect();
    let base = metric_on(model, &rows, y, metric);
    let repeats = repeats.max(1);
    Ok((0..x.n_cols())
        .into_par_iter()
        .map(|j| {
            let mut total = 0.0;
            for r in 0..repeats {
                let mut rng = stream_rng(seed, (j * repeats + r) as u64);
                let mut col = x.column(j);
                col.shuffle(&mut rng);
                let shuffled: Vec<Vec<f64>> = rows
                    .iter()
                    .zip(&col)
                    .map(|(row, &v)| {
                        let mut row = row.clone();
                        row[j] = v;
                        row
                    })
                    .collect();
                total += base - metric_on(model, &shuffled, y, metric);
            }
            total / repeats as f64
        })
        .collect())
}

const SHAPLEY_CHUNK: usize = 256;

/// Monte-Carlo Shapley values of `f(x)` against `background`.
///
/// Sample `s` walks a random feature order (the odd sample of each pair
/// walks the reverse of the even one) from background row `(s / 2) mod m`
/// to `x`, crediting each feature with its marginal change. Any residual
/// against `f(x) - mean f(background)` left by unbalanced background use is
/// spread evenly, so the contributions sum to it exactly.
pub fn shapley_mc<S: Scorer + ?Sized>(
    model: &S,
    x: &[f64],
    background: &FeatureMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = x.len();
    let m = background.n_rows();
    if m == 0 {
        return Err(Error::input("Shapley background is empty"));
    }
    if background.n_cols() != d {
        return Err(Error::input(format!(
            "row has {d} features, background has {}",
            background.n_cols()
        )));
    }
    let n_samples = n_samples.max(2);
    let n_pairs = n_samples.div_ceil(2);
    let n_chunks = n_pairs.div_ceil(SHAPLEY_CHUNK);
    let partials: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; d];
            let mut order: Vec<usize> = (0..d).collect();
            for p in c * SHAPLEY_CHUNK..((c + 1) * SHAPLEY_CHUNK).min(n_pairs) {
                let mut rng = stream_rng(seed, p as u64);
                order.shuffle(&mut rng);
                let z = background.row(p % m);
                for reverse in [false, true] {
                    let mut cur = z.to_vec();
                    let mut prev = model.score(&cur);
                    let mut step = |j: usize| {
                        cur[j] = x[j];
                        let next = model.score(&cur);
                        acc[j] += next - prev;
                        prev = next;
                    };
                    if reverse {
                        order.iter().rev().for_each(|&j| step(j));
                    } else {
                        order.iter().for_each(|&j| step(j));
                    }
                }
            }
            acc
        })
        .collect();
    let mut phi = vec![0.0; d];
    for part in &partials {
        for (a, b) in phi.iter_mut().zip(part) {
            *a += b;
        }
    }
    let walks = (2 * n_pairs) as f64;
    phi.iter_mut().for_each(|v| *v /= walks);
    if d > 0 {
        let mean_bg = background.rows().map(|r| model.score(r)).sum::<f64>() / m as f64;
        let residual = model.score(x) - mean_bg - phi.iter().sum::<f64>();
        phi.iter_mut().for_each(|v| *v += residual / d as f64);
    }
    Ok(phi)
}

/// Mean signed Shapley contribution per feature over the rows of `x`. Row
/// `i` uses seed `seed + i`.
pub fn shapley_direction_summary<S: Scorer + ?Sized>(
    model: &S,
    x: &FeatureMatrix,
    background: &FeatureMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = x.n_cols();
    let mut mean = vec![0.0; d];
    if x.n_rows() == 0 {
        return Ok(mean);
    }
    for (i, row) in x.rows().enumerate() {
        let phi = shapley_mc(model, row, background, n_samples, seed.wrapping_add(i as u64))?;
        for (a, b) in mean.iter_mut().zip(phi) {
            *a += b;
        }
    }
    mean.iter_mut().for_each(|v| *v /= x.n_rows() as f64);
    Ok(mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub impurity_importance: Option<f64>,
    pub permutation_drop: f64,
    pub shapley_mean: f64,
}

/// Per-feature importances, ranked by impurity (or permutation drop when
/// the model has no impurity weights), ties by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub model_type: String,
    pub features: Vec<FeatureImportance>,
}

impl ImportanceReport {
    pub fn new(model_type: &str, mut features: Vec<FeatureImportance>) -> Self {
        let key = |f: &FeatureImportance| f.impurity_importance.unwrap_or(f.permutation_drop);
        features.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.feature.cmp(&b.feature)));
        ImportanceReport {
            model_type: model_type.to_string(),
            features,
        }
    }

    pub fn top(&self, k: usize) -> &[FeatureImportance] {
        &self.features[..k.min(self.features.len())]
    }

    pub fn to_text(&self, k: usize) -> String {
        let mut out = format!(
            "{:<4} {:<28} {:>10} {:>10} {:>10}\n",
            "rank", "feature", "impurity", "perm_drop", "shap_mean"
        );
        for (i, f) in self.top(k).iter().enumerate() {
            let imp = f
                .impurity_importance
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:<4} {:<28} {:>10} {:>10.4} {:>+10.4}\n",
                i + 1,
                f.feature,
                imp,
                f.permutation_drop,
                f.shapley_mean
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_model_exact() {
        let bg = FeatureMatrix::from_rows(vec![vec![0.0, 0.0]], None).unwrap();
        let f = |r: &[f64]| r[0] + 2.0 * r[1];
        let phi = shapley_mc(&f, &[3.0, 4.0], &bg, 10, 1).unwrap();
        assert!((phi[0] - 3.0).abs() < 1e-12 && (phi[1] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn constant_model_zero() {
        let bg = FeatureMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 5.0]], None).unwrap();
        let f = |_: &[f64]| 0.7;
        let s = shapley_direction_summary(&f, &bg, &bg, 20, 0).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-12));
    }
}

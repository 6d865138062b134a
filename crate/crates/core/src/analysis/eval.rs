use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::learners::stream_rng;
use rand::Rng;

/// Positive class = residual (post-release).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn check_binary(name: &str, v: &[u8]) -> Result<()> {
    if v.iter().any(|&x| x > 1) {
        return Err(Error::input(format!("{name} must be 0/1")));
    }
    Ok(())
}

pub fn confusion(preds: &[u8], labels: &[u8]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::input(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    check_binary("predictions", preds)?;
    check_binary("labels", labels)?;
    let mut cm = ConfusionMatrix::default();
    for (&p, &y) in preds.iter().zip(labels) {
        match (p, y) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fp += 1,
            (0, 1) => cm.fn_ += 1,
            _ => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Accuracy, Metric::Precision, Metric::Recall, Metric::F1];

    pub fn of(self, cm: &ConfusionMatrix) -> f64 {
        let s = classification_metrics(cm);
        match self {
            Metric::Accuracy => s.accuracy,
            Metric::Precision => s.precision,
            Metric::Recall => s.recall,
            Metric::F1 => s.f1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" | "acc" => Ok(Metric::Accuracy),
            "precision" => Ok(Metric::Precision),
            "recall" => Ok(Metric::Recall),
            "f1" => Ok(Metric::F1),
            other => Err(Error::input(format!("unknown metric {other:?}"))),
        }
    }
}

/// Point estimates. Undefined ratios are 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn div(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn classification_metrics(cm: &ConfusionMatrix) -> Scores {
    let precision = div(cm.tp, cm.tp + cm.fp);
    let recall = div(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Scores {
        accuracy: div(cm.tp + cm.tn, cm.total()),
        precision,
        recall,
        f1,
    }
}

/// Linear-interpolation quantile of ascending data (`q` in [0, 1]).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Indices of bootstrap resample `r`: `n` uniform draws from the ChaCha8
/// stream `r` of `seed`.
pub fn resample_indices(n: usize, seed: u64, r: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, r);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Percentile bootstrap confidence interval for `metric`.
///
/// The interval is widened, if needed, to contain the point estimate: with
/// skewed resampling distributions the raw percentile interval can exclude
/// it, and reports promise `low <= point <= high`.
pub fn bootstrap_ci(
    preds: &[u8],
    labels: &[u8],
    metric: Metric,
    n_resamples: usize,
    seed: u64,
    level: f64,
) -> Result<(f64, f64)> {
    let n = preds.len();
    if n < 2 {
        return Err(Error::input("bootstrap needs at least two samples"));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::input(format!("confidence level must be in (0,1), got {level}")));
    }
    let point = metric.of(&confusion(preds, labels)?);
    let mut stats: Vec<f64> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|r| {
            let idx = resample_indices(n, seed, r);
            let p: Vec<u8> = idx.iter().map(|&i| preds[i]).collect();
            let y: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
            metric.of(&confusion(&p, &y).expect("validated above"))
        })
        .collect();
    if stats.is_empty() {
        return Ok((point, point));
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let low = quantile_sorted(&stats, alpha).min(point);
    let high = quantile_sorted(&stats, 1.0 - alpha).max(point);
    Ok((low, high))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McNemarMethod {
    Exact,
    Chi2Corrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// A right, B wrong.
    pub b: u64,
    /// A wrong, B right.
    pub c: u64,
    /// Chi-square statistic (chi-square method only).
    pub statistic: Option<f64>,
    pub p_value: f64,
    pub method: McNemarMethod,
}

/// Discordant counts below this use the exact binomial test.
pub const MCNEMAR_EXACT_BELOW: u64 = 25;

pub fn mcnemar_from_counts(b: u64, c: u64) -> McNemarResult {
    let n = b + c;
    if n < MCNEMAR_EXACT_BELOW {
        let p_value = if n == 0 {
            1.0
        } else {
            // exact in integers: n < 25 keeps every term below 2^53
            let mut term: u64 = 1;
            let mut tail: u64 = 0;
            for i in 0..=b.min(c) {
                if i > 0 {
                    term = term * (n - i + 1) / i;
                }
                tail += term;
            }
            (2.0 * tail as f64 / (1u64 << n) as f64).min(1.0)
        };
        return McNemarResult {
            b,
            c,
            statistic: None,
            p_value,
            method: McNemarMethod::Exact,
        };
    }
    let diff = (b as f64 - c as f64).abs() - 1.0;
    let stat = diff.powi(2) / n as f64;
    let chi = ChiSquared::new(1.0).expect("valid chi-square");
    McNemarResult {
        b,
        c,
        statistic: Some(stat),
        p_value: chi.sf(stat).clamp(0.0, 1.0),
        method: McNemarMethod::Chi2Corrected,
    }
}

pub fn mcnemar(preds_a: &[u8], preds_b: &[u8], labels: &[u8]) -> Result<McNemarResult> {
    if preds_a.len() != labels.len() || preds_b.len() != labels.len() {
        return Err(Error::input("prediction vectors and labels differ in length"));
    }
    let (mut b, mut c) = (0, 0);
    for ((&a, &bb), &y) in preds_a.iter().zip(preds_b).zip(labels) {
        match (a == y, bb == y) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_from_counts(b, c))
}

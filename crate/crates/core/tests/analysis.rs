mod common;

use rand::Rng;

use common::{must, rng};
use resfault::analysis::{
    bootstrap_ci, classification_metrics, confusion, mcnemar_from_counts, permutation_importance,
    shapley_mc, ConfusionMatrix, McNemarMethod, Metric,
};
use resfault::learners::{stream_rng, FeatureMatrix};

#[test]
fn published_scores_are_reproduced() {
    must(common::check_metric_arithmetic());
}

#[test]
fn undefined_ratios_are_zero() {
    let s = classification_metrics(&ConfusionMatrix { tp: 0, fp: 0, fn_: 0, tn: 5 });
    assert_eq!((s.accuracy, s.precision, s.recall, s.f1), (1.0, 0.0, 0.0, 0.0));
}

#[test]
fn mcnemar_exact_and_symmetric() {
    must(common::check_mcnemar());
}

#[test]
fn mcnemar_chi_square_branch() {
    // (|40 - 20| - 1)^2 / 60
    let r = mcnemar_from_counts(40, 20);
    assert_eq!(r.method, McNemarMethod::Chi2Corrected);
    let stat = 361.0 / 60.0;
    assert!((r.statistic.unwrap() - stat).abs() < 1e-12);
    // chi-square(1) survival = erfc(sqrt(x/2))
    assert!((r.p_value - 0.014_171_388_254_012_33).abs() < 1e-12, "{}", r.p_value);
    assert_eq!(mcnemar_from_counts(0, 0).p_value, 1.0);
}

/// Straightforward percentile bootstrap written without the library's
/// helpers, drawing indices from the same seeded streams.
fn reference_ci(preds: &[u8], labels: &[u8], metric: Metric, b: usize, seed: u64, level: f64) -> (f64, f64) {
    let n = preds.len();
    let mut stats = Vec::new();
    for r in 0..b as u64 {
        let mut g = stream_rng(seed, r);
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for _ in 0..n {
            let i = g.random_range(0..n);
            match (preds[i], labels[i]) {
                (1, 1) => tp += 1,
                (1, 0) => fp += 1,
                (0, 1) => fn_ += 1,
                _ => tn += 1,
            }
        }
        stats.push(metric.of(&ConfusionMatrix { tp, fp, fn_, tn }));
    }
    stats.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (stats.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        stats[lo] + (stats[hi] - stats[lo]) * (pos - lo as f64)
    };
    let point = metric.of(&confusion(preds, labels).unwrap());
    let alpha = (1.0 - level) / 2.0;
    (q(alpha).min(point), q(1.0 - alpha).max(point))
}

#[test]
fn bootstrap_matches_reference() {
    let mut g = rng(5);
    let labels: Vec<u8> = (0..150).map(|_| g.random_range(0..2)).collect();
    let preds: Vec<u8> = labels.iter().map(|&y| if g.random_bool(0.2) { 1 - y } else { y }).collect();
    for metric in Metric::ALL {
        let got = bootstrap_ci(&preds, &labels, metric, 500, 11, 0.95).unwrap();
        let want = reference_ci(&preds, &labels, metric, 500, 11, 0.95);
        assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12, "{metric:?}");
        let point = metric.of(&confusion(&preds, &labels).unwrap());
        assert!(got.0 <= point && point <= got.1);
    }
}

#[test]
fn shapley_matches_enumeration() {
    must(common::check_shapley());
}

#[test]
fn shapley_of_linear_model_is_exact() {
    // for f = w·x, phi_j = w_j (x_j - mean background_j)
    let w = [1.5, -2.0, 0.5];
    let f = |x: &[f64]| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let bg = FeatureMatrix::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![vec![0.0, 1.0, 2.0], vec![2.0, 3.0, 0.0]],
        None,
    )
    .unwrap();
    let x = [4.0, 1.0, -1.0];
    let phi = shapley_mc(&f, &x, &bg, 2000, 1).unwrap();
    let means = [1.0, 2.0, 1.0];
    for j in 0..3 {
        assert!((phi[j] - w[j] * (x[j] - means[j])).abs() < 1e-9, "{j}: {}", phi[j]);
    }
}

#[test]
fn permutation_importance_finds_the_signal() {
    let mut g = rng(9);
    let rows: Vec<Vec<f64>> = (0..400).map(|_| vec![g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)]).collect();
    let labels: Vec<u8> = rows.iter().map(|r| (r[0] > 0.0) as u8).collect();
    let x = FeatureMatrix::new(vec!["signal".into(), "noise".into()], rows, Some(labels)).unwrap();
    let model = |r: &[f64]| if r[0] > 0.0 { 0.9 } else { 0.1 };
    let drops = permutation_importance(&model, &x, Metric::Accuracy, 3, 5).unwrap();
    assert!(drops[0] > 0.3, "{drops:?}");
    assert_eq!(drops[1], 0.0);
}

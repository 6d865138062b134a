//! Score two classifiers, attach bootstrap confidence intervals and compare
//! them with McNemar's test.
//!
//! Usage: `evaluation [PREDICTIONS.csv MODEL_A MODEL_B]`, where the CSV is a
//! pipeline `predictions.csv`. Without arguments the published residual-fault
//! confusion counts are reproduced and two simulated models are compared.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resfault::analysis::{bootstrap_ci, classification_metrics, confusion, mcnemar, ConfusionMatrix, Metric};
use resfault::pipeline::{mcnemar_pair, Table};

fn main() -> resfault::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() == 3 {
        let table = Table::read(std::path::Path::new(&args[0]))?;
        let pair = mcnemar_pair(&table, &args[1], &args[2])?;
        println!("{}", serde_json::to_string_pretty(&pair)?);
        return Ok(());
    }

    // RandomForest on the residual-fault test set: TP 255, FN 29, FP 155, TN 66
    let s = classification_metrics(&ConfusionMatrix { tp: 255, fp: 155, fn_: 29, tn: 66 });
    println!(
        "published counts: accuracy {:.3} precision {:.3} recall {:.3} f1 {:.3}",
        s.accuracy, s.precision, s.recall, s.f1
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let labels: Vec<u8> = (0..500).map(|_| rng.random_bool(0.56) as u8).collect();
    let noisy = |rng: &mut ChaCha8Rng, err: f64| -> Vec<u8> {
        labels.iter().map(|&y| if rng.random_bool(err) { 1 - y } else { y }).collect()
    };
    let a = noisy(&mut rng, 0.25);
    let b = noisy(&mut rng, 0.35);
    for (name, preds) in [("model A", &a), ("model B", &b)] {
        let cm = confusion(preds, &labels)?;
        let f1 = Metric::F1.of(&cm);
        let (lo, hi) = bootstrap_ci(preds, &labels, Metric::F1, 1000, 42, 0.95)?;
        println!("{name}: F1 {f1:.3} [{lo:.3}, {hi:.3}]");
    }
    let test = mcnemar(&a, &b, &labels)?;
    println!(
        "McNemar: b={} c={} method={:?} p={:.3e}",
        test.b, test.c, test.method, test.p_value
    );
    Ok(())
}

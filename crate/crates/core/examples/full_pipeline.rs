//! Build the demo project in a temporary directory and run every stage.

use resfault::pipeline::{Pipeline, PipelineConfig, RepoConfig};
use resfault::scripted::demo_project;

fn main() -> resfault::Result<()> {
    env_logger::init();
    let dir = tempfile::tempdir().expect("temp dir");
    let demo = demo_project(dir.path())?;
    let mut cfg = PipelineConfig {
        out: dir.path().join("out"),
        split_ratio: 0.7,
        repos: vec![RepoConfig {
            path: demo.repo.clone(),
            issues: Some(demo.issues.clone()),
            contributors: Some(demo.contributors.clone()),
        }],
        ..PipelineConfig::default()
    };
    cfg.models.random_forest.n_trees = 50;
    cfg.models.local_outlier_factor.k = 3;
    let pipeline = Pipeline::new(cfg)?;
    for outcome in pipeline.run()? {
        println!("{:<10} {}", outcome.stage.name(), if outcome.skipped { "skipped" } else { "ran" });
    }
    let out = pipeline.out();
    for name in ["labels.jsonl", "eval_report.txt", "explain_random_forest.txt", "mcnemar.json"] {
        println!("\n== {name}");
        print!("{}", std::fs::read_to_string(out.join(name)).unwrap_or_default());
    }
    let dataset = std::fs::read_to_string(out.join("dataset.csv")).unwrap_or_default();
    println!("\n== dataset.csv: {} rows", dataset.lines().count().saturating_sub(2));
    Ok(())
}

//! Process metrics of every method a commit touched, measured at its parent.
//!
//! Usage: `process_history [REPO COMMIT]`. Without arguments the last
//! bug fix of a demo repository is used.

use std::path::PathBuf;

use resfault::catalog::PROCESS_METRICS;
use resfault::history::{changed_methods, process_metrics_for};
use resfault::mining::{scan_bugfix_commits, KeywordSet};
use resfault::scripted::demo_project;

fn main() -> resfault::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let keywords = KeywordSet::default();
    let _tmp;
    let (repo, commit) = if args.len() == 2 {
        (PathBuf::from(&args[0]), args[1].clone())
    } else {
        _tmp = tempfile::tempdir().expect("temp dir");
        let demo = demo_project(_tmp.path())?;
        let scan = scan_bugfix_commits(&demo.repo, &keywords)?;
        let last = scan.records.last().expect("demo has fixes").commit_id.clone();
        (demo.repo, last)
    };

    let Some((parent, targets)) = changed_methods(&repo, &commit)? else {
        println!("{commit} is a root commit; nothing to measure");
        return Ok(());
    };
    for (target, metrics) in process_metrics_for(&repo, &parent, &targets, &keywords)? {
        println!("{}::{}", target.path, target.qualified_name);
        for (name, v) in PROCESS_METRICS.iter().zip(&metrics.values) {
            println!("  {name:<5} {v:.4}");
        }
    }
    Ok(())
}

//! Mine a repository for bug-fixing commits and label each one.
//!
//! Usage: `mine_and_label [REPO ISSUES.jsonl CONTRIBUTORS.txt]`. Without
//! arguments a demo repository is built in a temporary directory.

use std::path::PathBuf;

use resfault::labeling::classify;
use resfault::mining::{
    detect_first_stable_release, extract_issue_evidence, load_issues, scan_bugfix_commits,
    ContributorRoster, KeywordSet,
};
use resfault::scripted::demo_project;

fn main() -> resfault::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let _tmp;
    let (repo, issues, contributors) = if args.len() == 3 {
        (PathBuf::from(&args[0]), PathBuf::from(&args[1]), PathBuf::from(&args[2]))
    } else {
        _tmp = tempfile::tempdir().expect("temp dir");
        let demo = demo_project(_tmp.path())?;
        (demo.repo, demo.issues, demo.contributors)
    };

    let scan = scan_bugfix_commits(&repo, &KeywordSet::default())?;
    let releases = detect_first_stable_release(&repo)?;
    let issues = load_issues(&issues)?;
    let roster = ContributorRoster::load(&contributors)?;
    println!("first stable release: {:?}", releases.first_stable_release_at);

    for commit in &scan.records {
        let evidence = commit
            .linked_issue_id
            .and_then(|id| issues.get(&id))
            .and_then(|raw| extract_issue_evidence(raw, Some(&roster)).ok());
        let c = classify(commit.committed_at, evidence.as_ref(), &releases);
        let subject = commit.message.lines().next().unwrap_or("");
        println!(
            "{} {:<11} {:<20} pre={} post={}  {subject}",
            &commit.commit_id[..8],
            format!("{:?}", c.label),
            format!("{:?}", c.reason),
            c.scores.pre_score,
            c.scores.post_score,
        );
    }
    Ok(())
}

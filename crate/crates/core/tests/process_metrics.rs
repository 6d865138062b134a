mod common;

use common::{expected_process_table, must, process_fixture};
use resfault::history::{build_history_slice, changed_methods, process_metrics_for, Target};
use resfault::mining::KeywordSet;

#[test]
fn scripted_repository_matches_hand_table() {
    must(common::check_process_metrics());
}

#[test]
fn rename_is_followed() {
    let dir = tempfile::tempdir().unwrap();
    let (repo, cutoff) = process_fixture(dir.path()).unwrap();
    let slice = build_history_slice(repo.path(), &Target::new("b.py", "f"), &cutoff).unwrap();
    // the first touch happened while the file was still a.py
    assert_eq!(slice.touches.len(), 3);
    assert_eq!(slice.touches[0].changed_files, vec!["a.py".to_string()]);
    assert_eq!(slice.file_commits, 5);
    assert_eq!(slice.loc_at_cutoff, 6);
    assert!(slice.touches.iter().all(|t| t.timestamp <= slice.cutoff));
}

#[test]
fn batch_and_single_paths_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (repo, cutoff) = process_fixture(dir.path()).unwrap();
    let targets = vec![Target::new("b.py", "f"), Target::new("b.py", "g")];
    let batch = process_metrics_for(repo.path(), &cutoff, &targets, &KeywordSet::default()).unwrap();
    let f = &batch[0].1;
    for (name, want) in expected_process_table() {
        assert!((f.value(name) - want).abs() < 1e-12, "{name}");
    }
    // g: created in c1, edited in c4 by Ben
    let g = &batch[1].1;
    assert_eq!(g.value("TC"), 2.0);
    assert_eq!(g.value("DA"), 2.0);
    assert_eq!(g.value("FC"), 0.0);
}

#[test]
fn changed_methods_come_from_the_parent() {
    let dir = tempfile::tempdir().unwrap();
    let (repo, cutoff) = process_fixture(dir.path()).unwrap();
    let (parent, targets) = changed_methods(repo.path(), &cutoff).unwrap().unwrap();
    assert_ne!(parent, cutoff);
    assert_eq!(targets, vec![Target::new("b.py", "f")]);
}

#[test]
fn absent_method_has_empty_history() {
    let dir = tempfile::tempdir().unwrap();
    let (repo, cutoff) = process_fixture(dir.path()).unwrap();
    let slice = build_history_slice(repo.path(), &Target::new("b.py", "missing"), &cutoff).unwrap();
    assert!(slice.touches.is_empty());
    let m = resfault::history::process_metrics(&slice, &KeywordSet::default());
    assert!(m.values.iter().all(|v| v.is_finite()));
    assert_eq!(m.value("TC"), 0.0);
}

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;

use crate::error::Result;
use crate::labeling::{classify, LabelRecord};
use crate::mining::{
    detect_first_stable_release, extract_issue_evidence, load_issues, repo_id_for,
    scan_bugfix_commits, CommitRecord, ContributorRoster, KeywordSet, ReleaseInfo,
};

use super::config::RepoConfig;

/// Bug-fixing commits and release info of every configured repository.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mined {
    pub commits: Vec<CommitRecord>,
    pub releases: BTreeMap<String, ReleaseInfo>,
}

pub fn mine_repos(repos: &[RepoConfig], keywords: &KeywordSet) -> Result<Mined> {
    let mut mined = Mined::default();
    for repo in repos {
        let outcome = scan_bugfix_commits(&repo.path, keywords)?;
        if outcome.skipped_diffs > 0 {
            warn!(
                "{}: skipped {} commits with unreadable diffs",
                repo.path.display(),
                outcome.skipped_diffs
            );
        }
        mined.commits.extend(outcome.records);
        mined
            .releases
            .insert(repo_id_for(&repo.path), detect_first_stable_release(&repo.path)?);
    }
    Ok(mined)
}

/// Label every commit. Issue files and rosters come from the matching
/// repository entry; issues that cannot be read as evidence leave the
/// commit unlinked.
pub fn classify_commits(
    commits: &[CommitRecord],
    releases: &BTreeMap<String, ReleaseInfo>,
    repos: &[RepoConfig],
) -> Result<Vec<LabelRecord>> {
    let mut context = BTreeMap::new();
    for repo in repos {
        let issues = match &repo.issues {
            Some(p) => load_issues(p)?,
            None => BTreeMap::new(),
        };
        let roster = repo
            .contributors
            .as_deref()
            .map(ContributorRoster::load)
            .transpose()?;
        context.insert(repo_id_for(&repo.path), (issues, roster));
    }
    let empty = (BTreeMap::new(), None);
    let no_release = ReleaseInfo::default();
    let mut out = Vec::with_capacity(commits.len());
    for c in commits {
        let (issues, roster) = context.get(&c.repo_id).unwrap_or(&empty);
        let evidence = c
            .linked_issue_id
            .and_then(|id| issues.get(&id))
            .and_then(|raw| match extract_issue_evidence(raw, roster.as_ref()) {
                Ok(ev) => Some(ev),
                Err(e) => {
                    warn!("{} {}: {e}", c.repo_id, c.commit_id);
                    None
                }
            });
        let release = releases.get(&c.repo_id).unwrap_or(&no_release);
        let result = classify(c.committed_at, evidence.as_ref(), release);
        out.push(LabelRecord::new(c, &result));
    }
    Ok(out)
}

/// Repository paths keyed by repo id.
pub fn repo_paths(repos: &[RepoConfig]) -> BTreeMap<String, &Path> {
    repos
        .iter()
        .map(|r| (repo_id_for(&r.path), r.path.as_path()))
        .collect()
}

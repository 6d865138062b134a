//! Repository mining: walk a local git history, flag bug-fixing commits by
//! keyword, and gather the release and issue metadata the labeler needs.

mod git;
pub mod issues;
pub mod release;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use log::warn;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use git::{commit_time, first_parent, git as run_git, list_files, show_file};
pub use issues::{extract_issue_evidence, load_issues, ContributorRoster, IssueEvidence, RawIssue};
pub use release::{detect_first_stable_release, is_stable_tag, ReleaseInfo};

/// Keywords used when none are configured.
pub const DEFAULT_KEYWORDS: [&str; 10] = [
    "fix", "fixes", "fixed", "bug", "fault", "defect", "crash", "issue", "error", "patch",
];

/// One mined bug-fixing commit. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub repo_id: String,
    pub commit_id: String,
    pub committed_at: i64,
    pub author_id: String,
    pub message: String,
    pub changed_files: Vec<String>,
    pub diff: String,
    pub linked_issue_id: Option<u64>,
}

/// A lowercase keyword set matched on word boundaries.
#[derive(Debug, Clone)]
pub struct KeywordSet {
    words: BTreeSet<String>,
    matcher: Regex,
}

impl KeywordSet {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(Error::input("keyword set is empty"));
        }
        let alternation = words
            .iter()
            .map(|w| regex::escape(w))
            .collect::<Vec<_>>()
            .join("|");
        let matcher = Regex::new(&format!(r"\b(?:{alternation})\b"))
            .map_err(|e| Error::input(format!("bad keyword: {e}")))?;
        Ok(KeywordSet { words, matcher })
    }

    pub fn matches(&self, message: &str) -> bool {
        self.matcher.is_match(&message.to_lowercase())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

impl Default for KeywordSet {
    fn default() -> Self {
        KeywordSet::new(DEFAULT_KEYWORDS).expect("default keywords are valid")
    }
}

/// Result of a history scan.
#[derive(Debug, Clone, Default)]
pub struct ScanOutcome {
    pub records: Vec<CommitRecord>,
    /// Flagged commits whose diff could not be read.
    pub skipped_diffs: usize,
}

/// Normalized author key: lowercased `name <email>`.
pub fn author_key(name: &str, email: &str) -> String {
    format!("{} <{}>", name.trim(), email.trim()).to_lowercase()
}

/// First `#123` reference in a commit message.
pub fn linked_issue(message: &str) -> Option<u64> {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[^\w&/])#(\d+)\b").unwrap())
        .captures(message)
        .and_then(|c| c[1].parse().ok())
}

/// Repository id: the directory name of the work tree.
pub fn repo_id_for(repo: &Path) -> String {
    repo.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .or_else(|| repo.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "repo".to_string())
}

/// A commit header as listed by `git log`.
#[derive(Debug, Clone)]
pub(crate) struct LogEntry {
    pub id: String,
    pub committed_at: i64,
    pub author_name: String,
    pub author_email: String,
    pub message: String,
}

/// Non-merge commits reachable from `rev`, oldest first.
pub(crate) fn log_entries(repo: &Path, rev: &str, paths: &[&str]) -> Result<Vec<LogEntry>> {
    let mut args = vec![
        "log",
        "--no-merges",
        "--format=%H%x1f%ct%x1f%an%x1f%ae%x1f%B%x1e",
        rev,
    ];
    if !paths.is_empty() {
        args.push("--");
        args.extend_from_slice(paths);
    }
    let out = run_git(repo, &args)?;
    let mut entries: Vec<LogEntry> = out
        .split('\x1e')
        .filter_map(|chunk| {
            let chunk = chunk.trim_start_matches('\n');
            if chunk.is_empty() {
                return None;
            }
            let mut parts = chunk.splitn(5, '\x1f');
            let id = parts.next()?.trim().to_string();
            let committed_at = parts.next()?.trim().parse().ok()?;
            let author_name = parts.next()?.to_string();
            let author_email = parts.next()?.to_string();
            let message = parts.next().unwrap_or("").trim_end().to_string();
            Some(LogEntry {
                id,
                committed_at,
                author_name,
                author_email,
                message,
            })
        })
        .collect();
    // git lists newest first; reverse, then order by time keeping topological order on ties
    entries.reverse();
    entries.sort_by_key(|e| e.committed_at);
    Ok(entries)
}

fn changed_files(repo: &Path, id: &str) -> Result<Vec<String>> {
    let out = run_git(
        repo,
        &["diff-tree", "--no-commit-id", "--name-only", "-r", "-M", "--root", id],
    )?;
    Ok(out.lines().filter(|l| !l.is_empty()).map(str::to_string).collect())
}

fn commit_diff(repo: &Path, id: &str) -> Result<String> {
    let bytes = git::git_bytes(repo, &["show", "--format=", "--patch", "--no-color", "-M", id])?;
    String::from_utf8(bytes).map_err(|_| Error::input(format!("diff of {id} is not UTF-8")))
}

/// Walk the full history of `repo` (HEAD) and return the bug-fixing commits,
/// ordered by commit time. Merge commits are skipped.
pub fn scan_bugfix_commits(repo: &Path, keywords: &KeywordSet) -> Result<ScanOutcome> {
    git::ensure_repository(repo)?;
    let repo_id = repo_id_for(repo);
    let flagged: Vec<LogEntry> = log_entries(repo, "HEAD", &[])?
        .into_iter()
        .filter(|e| keywords.matches(&e.message))
        .collect();

    enum Extracted {
        Record(CommitRecord),
        NoFiles,
        Unreadable,
    }

    let extracted: Vec<Extracted> = flagged
        .par_iter()
        .map(|entry| {
            let files = match changed_files(repo, &entry.id) {
                Ok(f) if !f.is_empty() => f,
                Ok(_) => return Extracted::NoFiles,
                Err(e) => {
                    warn!("skipping {}: {e}", entry.id);
                    return Extracted::Unreadable;
                }
            };
            match commit_diff(repo, &entry.id) {
                Ok(diff) => Extracted::Record(CommitRecord {
                    repo_id: repo_id.clone(),
                    commit_id: entry.id.clone(),
                    committed_at: entry.committed_at,
                    author_id: author_key(&entry.author_name, &entry.author_email),
                    message: entry.message.clone(),
                    changed_files: files,
                    diff,
                    linked_issue_id: linked_issue(&entry.message),
                }),
                Err(e) => {
                    warn!("skipping {}: {e}", entry.id);
                    Extracted::Unreadable
                }
            }
        })
        .collect();

    let mut outcome = ScanOutcome::default();
    for item in extracted {
        match item {
            Extracted::Record(r) => outcome.records.push(r),
            Extracted::NoFiles => {}
            Extracted::Unreadable => outcome.skipped_diffs += 1,
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_word_boundaries() {
        let kw = KeywordSet::default();
        assert!(kw.matches("Fix crash in parser"));
        assert!(kw.matches("BUG: off by one"));
        assert!(!kw.matches("Update README"));
        assert!(!kw.matches("add prefix handling"));
        assert!(!kw.matches("debugging helpers"));
        assert!(kw.matches("fixes #12"));
    }

    #[test]
    fn empty_keywords_rejected() {
        assert!(KeywordSet::new(Vec::<String>::new()).is_err());
        assert!(KeywordSet::new(["  "]).is_err());
    }

    #[test]
    fn issue_references() {
        assert_eq!(linked_issue("Fix overflow (#42)"), Some(42));
        assert_eq!(linked_issue("fixes #7 and #8"), Some(7));
        assert_eq!(linked_issue("see &#39; entity"), None);
        assert_eq!(linked_issue("no reference"), None);
    }

    #[test]
    fn author_normalization() {
        assert_eq!(author_key(" Ann ", "ANN@x.org"), "ann <ann@x.org>");
    }
}

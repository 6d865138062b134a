//! Issue ingestion from a local JSONL export and extraction of the boolean
//! signals the labeler consumes.
//!
//! Pattern inventory (all case-insensitive):
//!
//! | marker | where | pattern |
//! |---|---|---|
//! | version reference | title, body | `v1.2`, `v1.x`, `version 2`, `release 3.1`, `build 42` |
//! | affects label | labels, title, body | label starting `affects`, or `affects 2.1` / `affects-v1.x` |
//! | regression tag | labels, title | word `regression` |
//! | pre-release qualifier | milestone title, labels, title | `alpha`, `beta`, `rc`, `pre-release`, `dev`, `nightly`, `unreleased`, or a version with such a suffix |
//! | internal test marker | title, body | `failing test`, `test failure`, `CI failure`, `flaky test`, `found in review`, ... |
//! | bug template | body | report-template headings: `describe the bug`, `expected behavior`, `actual behavior`, `environment`, ... |
//! | reproduction steps | body | `steps to reproduce`, `to reproduce`, `minimal reproducible example`, `repro` |

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One issue as exported from a tracker.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawIssue {
    pub id: u64,
    #[serde(default)]
    pub created_at: Option<String>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: Option<String>,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default)]
    pub milestone_state: Option<String>,
    #[serde(default)]
    pub milestone_title: Option<String>,
    #[serde(default)]
    pub reporter_login: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueEvidence {
    pub issue_id: u64,
    pub created_at: i64,
    pub reporter_is_contributor: Option<bool>,
    pub has_version_reference: bool,
    pub has_regression_tag: bool,
    pub has_affects_label: bool,
    pub milestone_closed: bool,
    pub has_prerelease_qualifier: bool,
    pub has_internal_test_marker: bool,
    pub has_bug_template: bool,
    pub has_reproduction_steps: bool,
}

/// Logins of people with prior commits or reviews.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContributorRoster {
    logins: HashSet<String>,
}

impl ContributorRoster {
    pub fn new<I, S>(logins: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        ContributorRoster {
            logins: logins
                .into_iter()
                .map(|s| s.as_ref().trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    /// One login per line; blank lines and `#` comments ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(
            text.lines().filter(|l| !l.trim_start().starts_with('#')),
        ))
    }

    pub fn contains(&self, login: &str) -> bool {
        self.logins.contains(&login.trim().to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.logins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logins.is_empty()
    }
}

/// Read `issues.jsonl`. Later lines win on duplicate ids.
pub fn load_issues(path: &Path) -> Result<BTreeMap<u64, RawIssue>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut issues = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let issue: RawIssue = serde_json::from_str(line).map_err(|e| {
            Error::input(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        issues.insert(issue.id, issue);
    }
    Ok(issues)
}

/// Parse an ISO-8601 timestamp (RFC 3339, naive date-time taken as UTC, or a bare date).
pub fn parse_timestamp(text: &str) -> Option<i64> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

struct Patterns {
    version_ref: Regex,
    affects_text: Regex,
    affects_label: Regex,
    regression: Regex,
    prerelease: Regex,
    internal_test: Regex,
    bug_template: Regex,
    repro: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        version_ref: Regex::new(
            r"(?i)\bv\d+(?:\.(?:\d+|x))+\b|\bv\d+\b|\b(?:version|release|build)\s+v?\d+(?:\.(?:\d+|x))*\b",
        )
        .unwrap(),
        affects_text: Regex::new(r"(?i)\baffects?[\s:\-–]*v?\d+(?:\.(?:\d+|x))*").unwrap(),
        affects_label: Regex::new(r"(?i)^\s*affects\b").unwrap(),
        regression: Regex::new(r"(?i)\bregression\b").unwrap(),
        prerelease: Regex::new(
            r"(?i)\b(?:alpha|beta|rc\d*|pre-?release|dev|nightly|snapshot|unreleased)\b|\d(?:a|b|rc|\.dev|-alpha|-beta|-rc)\d*\b",
        )
        .unwrap(),
        internal_test: Regex::new(
            r"(?i)\b(?:failing tests?|test failures?|tests? (?:are |is )?failing|ci (?:failure|fails|failed|is red)|broken build|flaky tests?|found (?:during|in|while) (?:testing|review|code review)|caught by (?:tests?|ci)|unit tests? (?:fail|failed|fails|broke))\b",
        )
        .unwrap(),
        bug_template: Regex::new(
            r"(?im)^\s*(?:#+\s*|\*\*)?(?:describe the bug|bug description|bug report|expected behaviou?r|actual behaviou?r|current behaviou?r|environment|version information|system information)\b",
        )
        .unwrap(),
        repro: Regex::new(
            r"(?i)\b(?:steps to reproduce|to reproduce|reproduction steps|reproducible example|minimal example|how to reproduce|repro(?:ducer)?:)",
        )
        .unwrap(),
    })
}

/// Turn a raw issue into labeling evidence.
///
/// `roster` is `None` when no contributor list is available; the reporter
/// role is then unknown. A missing or unparseable `created_at` rejects the
/// issue, and the caller treats the commit as unlinked.
pub fn extract_issue_evidence(
    raw: &RawIssue,
    roster: Option<&ContributorRoster>,
) -> Result<IssueEvidence> {
    let created_at = raw
        .created_at
        .as_deref()
        .and_then(parse_timestamp)
        .filter(|ts| *ts > 0)
        .ok_or_else(|| {
            Error::input(format!("issue #{} has no usable creation timestamp", raw.id))
        })?;
    let p = patterns();
    let body = raw.body.as_deref().unwrap_or("");
    let title = raw.title.as_str();
    let any_label = |re: &Regex| raw.labels.iter().any(|l| re.is_match(l));
    let milestone_title = raw.milestone_title.as_deref().unwrap_or("");

    let reporter_is_contributor = match (roster, raw.reporter_login.as_deref()) {
        (Some(roster), Some(login)) if !login.trim().is_empty() => Some(roster.contains(login)),
        _ => None,
    };

    Ok(IssueEvidence {
        issue_id: raw.id,
        created_at,
        reporter_is_contributor,
        has_version_reference: p.version_ref.is_match(title) || p.version_ref.is_match(body),
        has_regression_tag: any_label(&p.regression) || p.regression.is_match(title),
        has_affects_label: any_label(&p.affects_label)
            || p.affects_text.is_match(title)
            || p.affects_text.is_match(body),
        milestone_closed: raw
            .milestone_state
            .as_deref()
            .is_some_and(|s| s.trim().eq_ignore_ascii_case("closed")),
        has_prerelease_qualifier: p.prerelease.is_match(milestone_title)
            || any_label(&p.prerelease)
            || p.prerelease.is_match(title),
        has_internal_test_marker: p.internal_test.is_match(title)
            || p.internal_test.is_match(body),
        has_bug_template: p.bug_template.is_match(body),
        has_reproduction_steps: p.repro.is_match(body),
    })
}

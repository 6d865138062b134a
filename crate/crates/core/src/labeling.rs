//! Residual (post-release) vs. non-residual (pre-release) labeling of
//! bug-fixing commits from issue evidence and release timing.
//!
//! Evidence is consumed strongest first: decisive hints from the linked
//! issue, then unweighted soft scores, then the reporter's role, and finally
//! the commit timestamp. A timestamp alone can establish a pre-release fix
//! but never a post-release one.

use serde::{Deserialize, Serialize};

use crate::mining::{CommitRecord, IssueEvidence, ReleaseInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    PreRelease,
    PostRelease,
    Unknown,
}

impl Label {
    /// Binary class for modeling: residual (post-release) = 1.
    pub fn as_class(self) -> Option<u8> {
        match self {
            Label::PreRelease => Some(0),
            Label::PostRelease => Some(1),
            Label::Unknown => None,
        }
    }
}

/// Why a label was assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonCode {
    StrongPre,
    StrongPost,
    PreScore,
    PostScore,
    ExternalReporter,
    InternalReporter,
    BeforeFirstRelease,
    NoStableRelease,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintScores {
    pub strong_pre: bool,
    pub strong_post: bool,
    pub pre_score: u32,
    pub post_score: u32,
}

/// Number of indicators feeding each soft score.
pub const PRE_INDICATORS: u32 = 3;
pub const POST_INDICATORS: u32 = 4;

/// Decisive hints: an issue opened before the first stable release is a
/// pre-release defect; explicit references to a shipped version are post-release.
pub fn strong_hints(evidence: &IssueEvidence, release: &ReleaseInfo) -> (bool, bool) {
    let strong_pre = release
        .first_stable_release_at
        .is_some_and(|frd| evidence.created_at < frd);
    let strong_post = evidence.has_version_reference
        || evidence.has_affects_label
        || evidence.has_regression_tag;
    (strong_pre, strong_post)
}

/// Unweighted sums of the soft boolean indicators.
pub fn soft_scores(evidence: &IssueEvidence) -> (u32, u32) {
    let pre = [
        evidence.has_prerelease_qualifier,
        evidence.has_internal_test_marker,
        evidence.reporter_is_contributor == Some(true),
    ];
    let post = [
        evidence.milestone_closed,
        evidence.has_bug_template,
        evidence.has_reproduction_steps,
        evidence.reporter_is_contributor == Some(false),
    ];
    let count = |flags: &[bool]| flags.iter().filter(|&&f| f).count() as u32;
    (count(&pre), count(&post))
}

/// Full classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub label: Label,
    pub scores: HintScores,
    pub reason: ReasonCode,
}

/// Label one commit. `evidence` is the linked issue's evidence, if any.
pub fn classify(
    committed_at: i64,
    evidence: Option<&IssueEvidence>,
    release: &ReleaseInfo,
) -> Classification {
    let mut scores = HintScores::default();
    if let Some(ev) = evidence {
        let (strong_pre, strong_post) = strong_hints(ev, release);
        let (pre_score, post_score) = soft_scores(ev);
        scores = HintScores {
            strong_pre,
            strong_post,
            pre_score,
            post_score,
        };
        let decided = |label, reason| Classification {
            label,
            scores,
            reason,
        };
        if strong_pre {
            return decided(Label::PreRelease, ReasonCode::StrongPre);
        }
        if strong_post {
            return decided(Label::PostRelease, ReasonCode::StrongPost);
        }
        if pre_score > post_score {
            return decided(Label::PreRelease, ReasonCode::PreScore);
        }
        if post_score > pre_score {
            return decided(Label::PostRelease, ReasonCode::PostScore);
        }
        match ev.reporter_is_contributor {
            Some(false) => return decided(Label::PostRelease, ReasonCode::ExternalReporter),
            Some(true) => return decided(Label::PreRelease, ReasonCode::InternalReporter),
            // unknown role: fall through to the timestamp rule
            None => {}
        }
    }
    let (label, reason) = match release.first_stable_release_at {
        None if committed_at > 0 => (Label::PreRelease, ReasonCode::NoStableRelease),
        Some(frd) if committed_at > 0 && committed_at < frd => {
            (Label::PreRelease, ReasonCode::BeforeFirstRelease)
        }
        _ => (Label::Unknown, ReasonCode::Inconclusive),
    };
    Classification {
        label,
        scores,
        reason,
    }
}

pub fn classify_commit(
    commit: &CommitRecord,
    evidence: Option<&IssueEvidence>,
    release: &ReleaseInfo,
) -> Label {
    classify(commit.committed_at, evidence, release).label
}

/// One line of `labels.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub repo_id: String,
    pub commit_id: String,
    pub label: Label,
    pub strong_pre: bool,
    pub strong_post: bool,
    pub pre_score: u32,
    pub post_score: u32,
    pub reason_code: ReasonCode,
}

impl LabelRecord {
    pub fn new(commit: &CommitRecord, c: &Classification) -> Self {
        LabelRecord {
            repo_id: commit.repo_id.clone(),
            commit_id: commit.commit_id.clone(),
            label: c.label,
            strong_pre: c.scores.strong_pre,
            strong_post: c.scores.strong_post,
            pre_score: c.scores.pre_score,
            post_score: c.scores.post_score,
            reason_code: c.reason,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DAY: i64 = 86_400;

    fn ev() -> IssueEvidence {
        IssueEvidence {
            issue_id: 1,
            created_at: 1000 * DAY,
            ..IssueEvidence::default()
        }
    }

    fn release_at(ts: i64) -> ReleaseInfo {
        ReleaseInfo {
            first_stable_release_at: Some(ts),
            stable_tags: vec![("v1.0".into(), ts)],
        }
    }

    #[test]
    fn soft_score_examples() {
        let e = IssueEvidence {
            has_internal_test_marker: true,
            ..ev()
        };
        assert_eq!(soft_scores(&e), (1, 0));
        let e = IssueEvidence {
            has_bug_template: true,
            has_reproduction_steps: true,
            ..ev()
        };
        assert_eq!(soft_scores(&e), (0, 2));
        assert_eq!(soft_scores(&ev()), (0, 0));
    }

    #[test]
    fn strong_hint_examples() {
        let e = ev();
        assert_eq!(strong_hints(&e, &release_at(e.created_at + DAY)), (true, false));
        assert_eq!(strong_hints(&e, &ReleaseInfo::default()), (false, false));
        let e = IssueEvidence {
            has_version_reference: true,
            ..ev()
        };
        assert_eq!(strong_hints(&e, &ReleaseInfo::default()), (false, true));
    }

    #[test]
    fn both_strong_hints_prefer_pre() {
        let e = IssueEvidence {
            has_regression_tag: true,
            ..ev()
        };
        let c = classify(e.created_at, Some(&e), &release_at(e.created_at + 1));
        assert_eq!(c.label, Label::PreRelease);
        assert_eq!(c.reason, ReasonCode::StrongPre);
    }

    #[test]
    fn tie_with_unknown_reporter_uses_timestamp() {
        let e = ev();
        let c = classify(e.created_at + DAY, Some(&e), &ReleaseInfo::default());
        assert_eq!((c.label, c.reason), (Label::PreRelease, ReasonCode::NoStableRelease));
        let c = classify(e.created_at + DAY, Some(&e), &release_at(e.created_at - DAY));
        assert_eq!((c.label, c.reason), (Label::Unknown, ReasonCode::Inconclusive));
    }

    #[test]
    fn unlabeled_classes() {
        assert_eq!(Label::PostRelease.as_class(), Some(1));
        assert_eq!(Label::PreRelease.as_class(), Some(0));
        assert_eq!(Label::Unknown.as_class(), None);
    }
}

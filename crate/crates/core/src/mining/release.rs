use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::git::git;
use crate::error::Result;

/// Release history relevant to labeling.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseInfo {
    pub first_stable_release_at: Option<i64>,
    /// Stable tags sorted by (timestamp, name).
    pub stable_tags: Vec<(String, i64)>,
}

impl ReleaseInfo {
    pub fn from_tags(tags: impl IntoIterator<Item = (String, i64)>) -> Self {
        let mut stable_tags: Vec<(String, i64)> = tags
            .into_iter()
            .filter(|(name, _)| is_stable_tag(name))
            .collect();
        stable_tags.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        let first_stable_release_at = stable_tags.first().map(|(_, ts)| *ts);
        ReleaseInfo {
            first_stable_release_at,
            stable_tags,
        }
    }
}

/// `v?MAJOR(.MINOR(.PATCH)?)?` with nothing after it.
pub fn is_stable_tag(name: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[vV]?\d+(\.\d+(\.\d+)?)?$").unwrap())
        .is_match(name)
}

/// Read the repository's tags and pick out the stable ones.
pub fn detect_first_stable_release(repo: &Path) -> Result<ReleaseInfo> {
    super::git::ensure_repository(repo)?;
    let out = git(
        repo,
        &[
            "for-each-ref",
            "--format=%(refname:short)%09%(creatordate:unix)",
            "refs/tags",
        ],
    )?;
    let tags = out.lines().filter_map(|line| {
        let (name, ts) = line.split_once('\t')?;
        Some((name.to_string(), ts.trim().parse::<i64>().ok()?))
    });
    Ok(ReleaseInfo::from_tags(tags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_tag_pattern() {
        for ok in ["1", "v1", "1.0", "v1.0", "V2.3.4", "10.20.30"] {
            assert!(is_stable_tag(ok), "{ok}");
        }
        for bad in ["v0.9-rc1", "1.0.0-beta", "1.0rc1", "v1.0.0.1", "release-1.0", "1.0.dev0", ""] {
            assert!(!is_stable_tag(bad), "{bad}");
        }
    }

    #[test]
    fn first_release_is_minimum() {
        let info = ReleaseInfo::from_tags(vec![
            ("v1.1".into(), 300),
            ("v0.9-rc1".into(), 50),
            ("v1.0".into(), 200),
        ]);
        assert_eq!(info.first_stable_release_at, Some(200));
        assert_eq!(info.stable_tags.len(), 2);
        assert!(ReleaseInfo::from_tags(vec![("1.0.0-beta".into(), 5)])
            .first_stable_release_at
            .is_none());
        assert!(ReleaseInfo::from_tags(vec![]).first_stable_release_at.is_none());
    }
}

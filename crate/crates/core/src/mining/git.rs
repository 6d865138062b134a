use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};

fn command(repo: &Path, args: &[&str]) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C")
        .arg(repo)
        .args(["-c", "core.quotepath=off", "-c", "log.showSignature=false"])
        .args(args)
        .env("LC_ALL", "C")
        .env("GIT_PAGER", "cat");
    cmd
}

/// Run git and return raw stdout.
pub(crate) fn git_bytes(repo: &Path, args: &[&str]) -> Result<Vec<u8>> {
    let out = command(repo, args).output().map_err(|e| Error::Git {
        args: args.join(" "),
        stderr: e.to_string(),
    })?;
    if !out.status.success() {
        return Err(Error::Git {
            args: args.join(" "),
            stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(out.stdout)
}

/// Run git and decode stdout lossily.
pub(crate) fn git(repo: &Path, args: &[&str]) -> Result<String> {
    git_bytes(repo, args).map(|b| String::from_utf8_lossy(&b).into_owned())
}

/// Confirm `repo` is a git work tree with at least one commit.
pub(crate) fn ensure_repository(repo: &Path) -> Result<()> {
    if !repo.is_dir() {
        return Err(Error::Repository {
            path: repo.to_path_buf(),
            reason: "not a directory".into(),
        });
    }
    git(repo, &["rev-parse", "--verify", "HEAD"])
        .map(|_| ())
        .map_err(|e| Error::Repository {
            path: repo.to_path_buf(),
            reason: e.to_string(),
        })
}

/// File contents at `rev:path`, or `None` when the path does not exist there.
pub(crate) fn show_file(repo: &Path, rev: &str, path: &str) -> Result<Option<String>> {
    let spec = format!("{rev}:{path}");
    match command(repo, &["show", &spec]).output() {
        Ok(out) if out.status.success() => {
            Ok(Some(String::from_utf8_lossy(&out.stdout).into_owned()))
        }
        Ok(_) => Ok(None),
        Err(e) => Err(Error::Git {
            args: format!("show {spec}"),
            stderr: e.to_string(),
        }),
    }
}

/// The first parent of `rev`, if any.
pub(crate) fn first_parent(repo: &Path, rev: &str) -> Result<Option<String>> {
    let spec = format!("{rev}^");
    match command(repo, &["rev-parse", "--verify", "--quiet", &spec]).output() {
        Ok(out) if out.status.success() => Ok(Some(
            String::from_utf8_lossy(&out.stdout).trim().to_string(),
        )),
        Ok(_) => Ok(None),
        Err(e) => Err(Error::Git {
            args: format!("rev-parse {spec}"),
            stderr: e.to_string(),
        }),
    }
}

/// Paths of all files tracked at `rev`.
pub(crate) fn list_files(repo: &Path, rev: &str) -> Result<Vec<String>> {
    let out = git(repo, &["ls-tree", "-r", "--name-only", rev])?;
    Ok(out.lines().map(str::to_string).collect())
}

/// Committer timestamp of a revision.
pub(crate) fn commit_time(repo: &Path, rev: &str) -> Result<i64> {
    let out = git(repo, &["show", "-s", "--format=%ct", rev])?;
    out.trim()
        .parse()
        .map_err(|_| Error::input(format!("bad timestamp for {rev}: {out:?}")))
}

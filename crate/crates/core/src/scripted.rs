//! Build small git repositories from a script, for tests, examples and
//! demos. Commits carry fixed author and committer dates so the resulting
//! history (and every hash) is reproducible.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use crate::error::{Error, Result};

/// One change to the work tree.
#[derive(Debug, Clone)]
pub enum Change {
    Write(String, String),
    Delete(String),
    Rename(String, String),
}

pub fn write(path: &str, content: &str) -> Change {
    Change::Write(path.to_string(), content.to_string())
}

pub fn delete(path: &str) -> Change {
    Change::Delete(path.to_string())
}

pub fn rename(from: &str, to: &str) -> Change {
    Change::Rename(from.to_string(), to.to_string())
}

#[derive(Debug)]
pub struct ScriptedRepo {
    root: PathBuf,
}

impl ScriptedRepo {
    /// Initialise an empty repository at `root` (created if missing).
    pub fn init(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let repo = ScriptedRepo {
            root: root.to_path_buf(),
        };
        repo.git(&["init", "-q", "-b", "main"], None)?;
        Ok(repo)
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    fn git(&self, args: &[&str], stamp: Option<(&str, &str, i64)>) -> Result<String> {
        let mut cmd = Command::new("git");
        cmd.arg("-C")
            .arg(&self.root)
            .args(["-c", "commit.gpgsign=false", "-c", "tag.gpgsign=false"])
            .args(args)
            .env("GIT_CONFIG_NOSYSTEM", "1")
            .env("GIT_CONFIG_GLOBAL", "/dev/null")
            .env("LC_ALL", "C");
        if let Some((name, email, ts)) = stamp {
            let date = format!("@{ts} +0000");
            cmd.env("GIT_AUTHOR_NAME", name)
                .env("GIT_AUTHOR_EMAIL", email)
                .env("GIT_COMMITTER_NAME", name)
                .env("GIT_COMMITTER_EMAIL", email)
                .env("GIT_AUTHOR_DATE", &date)
                .env("GIT_COMMITTER_DATE", &date);
        } else {
            cmd.env("GIT_AUTHOR_NAME", "fixture")
                .env("GIT_AUTHOR_EMAIL", "fixture@example.org")
                .env("GIT_COMMITTER_NAME", "fixture")
                .env("GIT_COMMITTER_EMAIL", "fixture@example.org");
        }
        let out = cmd.output().map_err(|e| Error::Git {
            args: args.join(" "),
            stderr: e.to_string(),
        })?;
        if !out.status.success() {
            return Err(Error::Git {
                args: args.join(" "),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
    }

    /// Apply `changes` and commit them; returns the new commit id.
    pub fn commit(
        &self,
        author: (&str, &str),
        timestamp: i64,
        message: &str,
        changes: &[Change],
    ) -> Result<String> {
        for change in changes {
            match change {
                Change::Write(path, content) => {
                    let full = self.root.join(path);
                    if let Some(dir) = full.parent() {
                        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                    }
                    fs::write(&full, content).map_err(|e| Error::io(&full, e))?;
                    self.git(&["add", "--", path], None)?;
                }
                Change::Delete(path) => {
                    self.git(&["rm", "-q", "--", path], None)?;
                }
                Change::Rename(from, to) => {
                    if let Some(dir) = self.root.join(to).parent() {
                        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                    }
                    self.git(&["mv", from, to], None)?;
                }
            }
        }
        self.git(
            &["commit", "-q", "--allow-empty", "-m", message],
            Some((author.0, author.1, timestamp)),
        )?;
        self.head()
    }

    /// Lightweight tag on HEAD; its date is the commit date.
    pub fn tag(&self, name: &str) -> Result<()> {
        self.git(&["tag", name], None).map(|_| ())
    }

    pub fn head(&self) -> Result<String> {
        self.git(&["rev-parse", "HEAD"], None)
    }
}

pub const DAY: i64 = 86_400;
/// 2021-01-01T00:00:00Z; fixture histories start here.
pub const EPOCH: i64 = 1_609_459_200;

const ALICE: (&str, &str) = ("Alice Smith", "alice@example.org");
const BOB: (&str, &str) = ("Bob Jones", "bob@example.org");
const CAROL: (&str, &str) = ("Carol White", "carol@example.org");

/// A demo project on disk: the repository plus the issue export and the
/// contributor list that go with it.
#[derive(Debug, Clone)]
pub struct DemoProject {
    pub repo: PathBuf,
    pub issues: PathBuf,
    pub contributors: PathBuf,
}

const GEOMETRY_V1: &str = r#""""Small geometry helpers."""
import math

SCALE = 10


class Shape:
    def __init__(self, name):
        self.name = name

    def area(self):
        return 0

    def describe(self):
        return "%s with area %.2f" % (self.name, self.area())


class Circle(Shape):
    def __init__(self, r):
        super().__init__("circle")
        self.r = r

    def area(self):
        return math.pi * self.r ** 2


def distance(a, b):
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return math.sqrt(dx * dx + dy * dy)


def clamp(v, lo, hi):
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v
"#;

const PARSER_V1: &str = r#"import re

TOKEN = re.compile(r"\s*(\d+|[-+*/()])")


def tokenize(text):
    # split into numbers and operators
    out = []
    pos = 0
    while pos < len(text):
        m = TOKEN.match(text, pos)
        if not m:
            raise ValueError("bad input at %d" % pos)
        out.append(m.group(1))
        pos = m.end()
    return out


def evaluate(tokens):
    total = 0
    sign = 1
    for tok in tokens:
        if tok == "+":
            sign = 1
        elif tok == "-":
            sign = -1
        else:
            total += sign * int(tok)
    return total
"#;

const UTIL_V1: &str = r#"def chunks(items, size):
    for i in range(0, len(items), size):
        yield items[i:i + size]


def flatten(rows):
    return [x for row in rows for x in row]


def safe_div(a, b):
    try:
        return a / b
    except ZeroDivisionError:
        return None
"#;

const STATS: &str = r#"def mean(values):
    if not values:
        return 0.0
    return sum(values) / len(values)


def variance(values):
    m = mean(values)
    return sum((v - m) ** 2 for v in values) / max(1, len(values) - 1)


def median(values):
    s = sorted(values)
    n = len(s)
    if n == 0:
        return None
    mid = n // 2
    if n % 2:
        return s[mid]
    return (s[mid - 1] + s[mid]) / 2
"#;

const TEXT: &str = r#"import re

WORD = re.compile(r"[A-Za-z]+")


def words(text):
    return WORD.findall(text)


def title_case(text):
    return " ".join(w.capitalize() for w in text.split())


def count_words(text):
    counts = {}
    for w in words(text.lower()):
        counts[w] = counts.get(w, 0) + 1
    return counts


class Formatter:
    def __init__(self, width=80):
        self.width = width

    def wrap(self, text):
        lines = []
        line = ""
        for w in text.split():
            if len(line) + len(w) + 1 > self.width:
                lines.append(line)
                line = w
            else:
                line = (line + " " + w).strip()
        if line:
            lines.append(line)
        return lines
"#;

/// Build the standard demo project under `dir`: three Python modules, two
/// years of history with a rename, a stable release and a mix of pre- and
/// post-release fixes linked to issues.
pub fn demo_project(dir: &Path) -> Result<DemoProject> {
    let repo_dir = dir.join("demo");
    let repo = ScriptedRepo::init(&repo_dir)?;
    let t = |days: i64| EPOCH + days * DAY;

    repo.commit(ALICE, t(0), "Initial geometry module", &[write("pkg/geometry.py", GEOMETRY_V1)])?;
    repo.commit(BOB, t(3), "Add expression parser", &[write("pkg/parser.py", PARSER_V1)])?;
    repo.commit(ALICE, t(5), "Add utilities", &[write("pkg/util.py", UTIL_V1)])?;
    repo.commit(
        CAROL,
        t(8),
        "Add stats and text helpers",
        &[
            write("pkg/__init__.py", "\"\"\"Demo package.\"\"\"\n"),
            write("pkg/stats.py", STATS),
            write("pkg/text.py", TEXT),
        ],
    )?;

    let geometry_v2 = GEOMETRY_V1.replace(
        "    if v < lo:\n        return lo\n",
        "    if lo > hi:\n        lo, hi = hi, lo\n    if v < lo:\n        return lo\n",
    );
    repo.commit(
        BOB,
        t(12),
        "Fix clamp when bounds are swapped (#1)",
        &[write("pkg/geometry.py", &geometry_v2)],
    )?;

    let parser_v2 = PARSER_V1.replace(
        "        else:\n            total += sign * int(tok)\n",
        "        elif tok.isdigit():\n            total += sign * int(tok)\n        else:\n            raise ValueError(tok)\n",
    );
    repo.commit(
        ALICE,
        t(20),
        "Fix crash on operators in evaluate (#2)",
        &[write("pkg/parser.py", &parser_v2)],
    )?;
    repo.commit(BOB, t(25), "Rename util module", &[rename("pkg/util.py", "pkg/helpers.py")])?;
    repo.commit(ALICE, t(30), "Release 1.0", &[write("VERSION", "1.0\n")])?;
    repo.tag("v1.0")?;

    let geometry_v3 = geometry_v2.replace(
        "    dx = a[0] - b[0]\n",
        "    if len(a) != len(b):\n        raise ValueError(\"dimension mismatch\")\n    dx = a[0] - b[0]\n",
    );
    repo.commit(
        CAROL,
        t(45),
        "Fix distance for mismatched points (#3)",
        &[write("pkg/geometry.py", &geometry_v3)],
    )?;

    let helpers_v2 = UTIL_V1
        .replace("    for i in range(0, len(items), size):\n", "    if size <= 0:\n        raise ValueError(\"size must be positive\")\n    for i in range(0, len(items), size):\n");
    repo.commit(
        BOB,
        t(60),
        "Fix infinite loop in chunks with zero size (#4)",
        &[write("pkg/helpers.py", &helpers_v2)],
    )?;

    let parser_v3 = parser_v2.replace(
        "        if not m:\n",
        "        if not m or not m.group(1):\n",
    );
    repo.commit(
        ALICE,
        t(75),
        "Fix tokenizer on trailing whitespace (#5)",
        &[write("pkg/parser.py", &parser_v3)],
    )?;

    let geometry_v4 = geometry_v3.replace(
        "        return math.pi * self.r ** 2\n",
        "        if self.r < 0:\n            raise ValueError(\"negative radius\")\n        return math.pi * self.r ** 2\n",
    );
    repo.commit(
        CAROL,
        t(90),
        "Fix negative radius bug",
        &[write("pkg/geometry.py", &geometry_v4)],
    )?;
    let helpers_v3 = helpers_v2.replace(
        "    except ZeroDivisionError:\n        return None\n",
        "    except (ZeroDivisionError, TypeError):\n        return None\n",
    );
    repo.commit(
        BOB,
        t(100),
        "Fix safe_div on bad operand types (#6)",
        &[write("pkg/helpers.py", &helpers_v3)],
    )?;

    let issues = dir.join("issues.jsonl");
    let lines = [
        r#"{"id":1,"created_at":"2021-01-10T09:00:00Z","title":"clamp returns wrong value","body":"Found by unit test in CI","labels":["bug"],"milestone_state":null,"reporter_login":"bob"}"#,
        r#"{"id":2,"created_at":"2021-01-19T09:00:00Z","title":"evaluate crashes","body":"Steps to reproduce:\n1. run evaluate","labels":["bug"],"milestone_state":null,"reporter_login":"alice"}"#,
        r#"{"id":3,"created_at":"2021-02-12T09:00:00Z","title":"distance fails in 1.0","body":"Since version 1.0 distance raises. Affects version 1.0","labels":["bug","regression"],"milestone_state":null,"reporter_login":"outsider"}"#,
        r#"{"id":4,"created_at":"2021-02-27T09:00:00Z","title":"chunks hangs","body":"Steps to reproduce: chunks(x, 0)","labels":["bug"],"milestone_state":null,"reporter_login":"user42"}"#,
        r#"{"id":5,"created_at":"2021-03-15T09:00:00Z","title":"tokenizer issue","body":"trailing spaces","labels":[],"milestone_state":null,"reporter_login":"alice"}"#,
        r#"{"id":6,"created_at":"2021-04-09T09:00:00Z","title":"safe_div TypeError on 1.0","body":"reported on release 1.0","labels":["bug"],"milestone_state":null,"reporter_login":"someone"}"#,
    ];
    fs::write(&issues, lines.join("\n") + "\n").map_err(|e| Error::io(&issues, e))?;
    let contributors = dir.join("contributors.txt");
    fs::write(&contributors, "alice\nbob\ncarol\n").map_err(|e| Error::io(&contributors, e))?;
    Ok(DemoProject {
        repo: repo_dir,
        issues,
        contributors,
    })
}

//! Oracles shared by the integration tests and the acceptance runner. Each
//! `check_*` function verifies one acceptance criterion against values
//! computed independently of the library.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resfault::analysis::{
    classification_metrics, mcnemar, mcnemar_from_counts, shapley_mc, ConfusionMatrix,
    McNemarMethod, Scorer,
};
use resfault::catalog::product_columns;
use resfault::history::{build_history_slice, process_metrics, ProcessMetrics, Target};
use resfault::labeling::{classify, Label, ReasonCode};
use resfault::learners::{
    fit_isolation_forest, fit_lof, train_gbt, train_random_forest, BoostConfig, FeatureMatrix,
    ForestConfig, IsolationConfig, Model, ModelFile,
};
use resfault::metrics::{file_method_rows, FileSummary, ProjectIndex};
use resfault::mining::{extract_issue_evidence, ContributorRoster, KeywordSet, RawIssue, ReleaseInfo};
use resfault::naturalness::{cross_entropy, train_ngram, Smoothing};
use resfault::pipeline::io::fmt_f64;
use resfault::pipeline::{assert_no_leakage, Dataset, Pipeline, PipelineConfig, RepoConfig, Table};
use resfault::python::parse_source;
use resfault::repr::{cca, pca_fit};
use resfault::scripted::{demo_project, rename, write, ScriptedRepo, DAY, EPOCH};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw by Box-Muller.
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

// ---------------------------------------------------------------- arithmetic

/// Published confusion counts and the scores reported for them.
pub const PUBLISHED_ROWS: [(&str, [u64; 4], [f64; 4]); 2] = [
    ("RandomForest", [255, 155, 29, 66], [0.636, 0.622, 0.898, 0.735]),
    ("Gemini", [280, 211, 4, 10], [0.574, 0.570, 0.986, 0.723]),
];

pub fn check_metric_arithmetic() -> Check {
    for (name, [tp, fp, fn_, tn], expected) in PUBLISHED_ROWS {
        let s = classification_metrics(&ConfusionMatrix { tp, fp, fn_, tn });
        let got = [s.accuracy, s.precision, s.recall, s.f1];
        for (i, metric) in ["accuracy", "precision", "recall", "f1"].iter().enumerate() {
            ensure!(
                close(got[i], expected[i], 0.001),
                "{name} {metric}: {} vs published {}",
                got[i],
                expected[i]
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- labeling

pub const FIRST_RELEASE: i64 = EPOCH + 100 * DAY;

fn release() -> ReleaseInfo {
    ReleaseInfo::from_tags(vec![
        ("v0.9-rc1".to_string(), EPOCH + 60 * DAY),
        ("v1.0".to_string(), FIRST_RELEASE),
        ("v1.1".to_string(), FIRST_RELEASE + 50 * DAY),
    ])
}

fn roster() -> ContributorRoster {
    ContributorRoster::new(["core-dev", "maintainer"])
}

fn iso(ts: i64) -> String {
    chrono::DateTime::from_timestamp(ts, 0)
        .expect("valid timestamp")
        .to_rfc3339()
}

/// A hand-labeled fixture: commit time, the linked issue (if any), the
/// release history, and the expected label and reason.
pub struct LabelFixture {
    pub name: &'static str,
    pub committed_at: i64,
    pub issue: Option<RawIssue>,
    pub releases: ReleaseInfo,
    pub expected: (Label, ReasonCode),
}

fn issue(days_after_release: i64, title: &str, body: &str, reporter: &str) -> RawIssue {
    RawIssue {
        id: 1,
        created_at: Some(iso(FIRST_RELEASE + days_after_release * DAY)),
        title: title.to_string(),
        body: Some(body.to_string()),
        reporter_login: (!reporter.is_empty()).then(|| reporter.to_string()),
        ..RawIssue::default()
    }
}

pub fn label_fixtures() -> Vec<LabelFixture> {
    use Label::*;
    use ReasonCode::*;
    let after = FIRST_RELEASE + 30 * DAY;
    let before = FIRST_RELEASE - 30 * DAY;
    let fx = |name, committed_at, issue, expected| LabelFixture {
        name,
        committed_at,
        issue,
        releases: release(),
        expected,
    };
    vec![
        fx("issue opened before first release", after,
            Some(issue(-10, "Crash on empty input", "", "someone")), (PreRelease, StrongPre)),
        fx("pre-release issue that also names a version", after,
            Some(issue(-1, "Regression in v0.9 parser", "", "someone")), (PreRelease, StrongPre)),
        fx("version reference in title", after,
            Some(issue(5, "Wrong totals in v1.0", "", "core-dev")), (PostRelease, StrongPost)),
        fx("version reference in body", before,
            Some(issue(5, "Wrong totals", "Seen with version 1.0.", "")), (PostRelease, StrongPost)),
        fx("regression in title", after,
            Some(issue(5, "Regression: slow import", "", "core-dev")), (PostRelease, StrongPost)),
        fx("affects text", after,
            Some(issue(5, "Bad rounding", "This affects 1.1 too", "")), (PostRelease, StrongPost)),
        LabelFixture {
            issue: Some(RawIssue { labels: vec!["affects-users".into()], ..issue(3, "Bad rounding", "", "") }),
            ..fx("affects label", after, None, (PostRelease, StrongPost))
        },
        fx("internal test marker outweighs nothing", after,
            Some(issue(5, "Flaky test in CI", "", "")), (PreRelease, PreScore)),
        fx("two pre indicators vs one post", after,
            Some(issue(5, "beta: test failure in parser", "Steps to reproduce: run it", "")),
            (PreRelease, PreScore)),
        fx("contributor and test marker vs template", after,
            Some(issue(5, "CI failure on main", "## Expected behavior\nno error", "core-dev")),
            (PreRelease, PreScore)),
        fx("bug template and repro steps", before,
            Some(issue(5, "Crash", "**Describe the bug**\nboom\nSteps to reproduce: call f()", "")),
            (PostRelease, PostScore)),
        fx("external reporter with repro", after,
            Some(issue(5, "Crash", "How to reproduce: call f()", "stranger")), (PostRelease, PostScore)),
        LabelFixture {
            issue: Some(RawIssue { milestone_state: Some("closed".into()), ..issue(5, "Crash", "", "") }),
            ..fx("closed milestone", after, None, (PostRelease, PostScore))
        },
        fx("tie, external reporter", after,
            Some(issue(5, "nightly: flaky test", "Steps to reproduce: x", "stranger")),
            (PostRelease, ExternalReporter)),
        fx("tie, internal reporter", after,
            Some(issue(5, "Crash", "Steps to reproduce: x", "maintainer")),
            (PreRelease, InternalReporter)),
        fx("tie at zero, unknown reporter, before release", before,
            Some(issue(5, "Crash", "", "")), (PreRelease, BeforeFirstRelease)),
        fx("tie at zero, unknown reporter, after release", after,
            Some(issue(5, "Crash", "", "")), (Unknown, Inconclusive)),
        fx("no issue, before first release", before, None, (PreRelease, BeforeFirstRelease)),
        fx("no issue, after first release", after, None, (Unknown, Inconclusive)),
        fx("no issue, exactly at first release", FIRST_RELEASE, None, (Unknown, Inconclusive)),
        LabelFixture {
            releases: ReleaseInfo::default(),
            ..fx("no issue, no release at all", after, None, (PreRelease, NoStableRelease))
        },
        LabelFixture {
            releases: ReleaseInfo::from_tags(vec![("v1.0-beta".into(), EPOCH)]),
            ..fx("only pre-release tags", after, None, (PreRelease, NoStableRelease))
        },
        LabelFixture {
            releases: ReleaseInfo::default(),
            ..fx("no release, post evidence", after,
                Some(issue(5, "Crash in v2", "", "")), (PostRelease, StrongPost))
        },
        fx("dev build issue from an outsider", after,
            Some(issue(5, "dev build crash", "", "stranger")), (PostRelease, ExternalReporter)),
    ]
}

/// Run a fixture through evidence extraction and the labeler.
pub fn label_of(f: &LabelFixture) -> Result<(Label, ReasonCode), String> {
    let roster = roster();
    let evidence = match &f.issue {
        Some(raw) => Some(extract_issue_evidence(raw, Some(&roster)).map_err(|e| e.to_string())?),
        None => None,
    };
    let c = classify(f.committed_at, evidence.as_ref(), &f.releases);
    Ok((c.label, c.reason))
}

pub fn check_labeling_fixtures() -> Check {
    let fixtures = label_fixtures();
    ensure!(fixtures.len() >= 20, "only {} fixtures", fixtures.len());
    for f in &fixtures {
        let got = label_of(f)?;
        ensure!(got == f.expected, "{}: got {got:?}, expected {:?}", f.name, f.expected);
    }
    // every reason code is exercised
    let reasons: std::collections::BTreeSet<String> =
        fixtures.iter().map(|f| format!("{:?}", f.expected.1)).collect();
    ensure!(reasons.len() == 9, "reasons covered: {reasons:?}");

    let mut r = rng(7);
    for i in 0..1000 {
        let n_tags = r.random_range(0..4);
        let tags = (0..n_tags).map(|t| {
            let name = if r.random_bool(0.7) { format!("v{t}.0") } else { format!("v{t}.0-rc1") };
            (name, r.random_range(-5_000i64..5_000_000_000))
        });
        let releases = ReleaseInfo::from_tags(tags.collect::<Vec<_>>());
        let committed_at = r.random_range(-5_000i64..5_000_000_000);
        let c = classify(committed_at, None, &releases);
        ensure!(
            c.label != Label::PostRelease,
            "no-issue input {i} (t={committed_at}, {releases:?}) labeled post-release"
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- product metrics

pub const GOLDEN_SOURCE: &str = "inventory.py";
pub const GOLDEN_CSV: &str = "inventory_metrics.csv";

/// Full metric vector of every method in `source`, one CSV row per method.
pub fn metrics_csv(path: &str, source: &str) -> Result<String, String> {
    let parsed = parse_source(path, source).map_err(|e| e.to_string())?;
    let summary = FileSummary::of(&parsed);
    let project = ProjectIndex::build([(path, &summary)]);
    let mut out = String::from("qualified_name");
    for c in product_columns() {
        let _ = write!(out, ",{c}");
    }
    out.push_str(",presence\n");
    for row in file_method_rows(path, &parsed, &project) {
        out.push_str(&row.qualified_name);
        for v in &row.metrics.values {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        let _ = writeln!(out, ",{}", row.metrics.presence);
    }
    Ok(out)
}

pub fn check_golden_file() -> Check {
    let dir = fixtures_dir();
    let source = fs::read_to_string(dir.join(GOLDEN_SOURCE)).map_err(|e| e.to_string())?;
    let golden = fs::read_to_string(dir.join(GOLDEN_CSV)).map_err(|e| e.to_string())?;
    let got = metrics_csv(GOLDEN_SOURCE, &source)?;
    if got != golden {
        let diff: Vec<String> = got
            .lines()
            .zip(golden.lines())
            .filter(|(a, b)| a != b)
            .map(|(a, b)| format!("got  {a}\nwant {b}"))
            .collect();
        return Err(format!("golden mismatch:\n{}", diff.join("\n")));
    }
    Ok(())
}

/// Line kinds the generator knows it emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Code,
    Comment,
    Blank,
}

/// A generated module and the kind of each of its lines.
pub struct Generated {
    pub source: String,
    pub kinds: Vec<LineKind>,
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    src: String,
    kinds: Vec<LineKind>,
    counter: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn line(&mut self, indent: usize, text: &str, kind: LineKind) {
        if kind == LineKind::Blank {
            self.src.push('\n');
        } else {
            let _ = writeln!(self.src, "{}{text}", "    ".repeat(indent));
        }
        self.kinds.push(kind);
    }

    fn name(&mut self) -> String {
        self.counter += 1;
        let stems = ["val", "acc", "item", "n", "total", "key"];
        format!("{}{}", stems[self.rng.random_range(0..stems.len())], self.counter % 7)
    }

    fn expr(&mut self) -> String {
        let a = self.name();
        match self.rng.random_range(0..6) {
            0 => format!("{a} + {}", self.rng.random_range(0..100)),
            1 => format!("len({a}) * 3"),
            2 => format!("'text {a}'"),
            3 => format!("[{a}, {}]", self.rng.random_range(0..9)),
            4 => format!("{a}.get('k', None)"),
            _ => format!("({a} - 1) / 2.5"),
        }
    }

    fn block(&mut self, indent: usize, depth: usize) {
        let n = self.rng.random_range(1..5);
        for i in 0..n {
            self.stmt(indent, depth, i == 0);
        }
    }

    fn stmt(&mut self, indent: usize, depth: usize, first: bool) {
        let choice = self.rng.random_range(0..10);
        match choice {
            0 if !first => self.line(indent, "", LineKind::Blank),
            1 => {
                let c = format!("# note {}", self.counter);
                self.line(indent, &c, LineKind::Comment);
                let e = format!("{} = {}", self.name(), self.expr());
                self.line(indent, &e, LineKind::Code);
            }
            2 | 3 if depth < 3 => {
                let cond = format!("if {} > {}:", self.name(), self.rng.random_range(0..50));
                self.line(indent, &cond, LineKind::Code);
                self.block(indent + 1, depth + 1);
                if self.rng.random_bool(0.5) {
                    self.line(indent, "else:", LineKind::Code);
                    self.block(indent + 1, depth + 1);
                }
            }
            4 if depth < 3 => {
                let head = format!("for {} in range({}):", self.name(), self.rng.random_range(1..20));
                self.line(indent, &head, LineKind::Code);
                self.block(indent + 1, depth + 1);
            }
            5 if depth < 3 => {
                let head = format!("while {} and not {}:", self.name(), self.name());
                self.line(indent, &head, LineKind::Code);
                self.block(indent + 1, depth + 1);
            }
            6 => {
                let e = format!("{} = {}  # trailing", self.name(), self.expr());
                self.line(indent, &e, LineKind::Code);
            }
            7 => {
                let e = format!("return {}", self.expr());
                self.line(indent, &e, LineKind::Code);
            }
            _ => {
                let e = format!("{} = {}", self.name(), self.expr());
                self.line(indent, &e, LineKind::Code);
            }
        }
    }

    fn function(&mut self, indent: usize) {
        let head = format!("def {}_fn(self, a, b=2):", self.name());
        self.line(indent, &head, LineKind::Code);
        if self.rng.random_bool(0.4) {
            self.line(indent + 1, "\"\"\"Docstring.\"\"\"", LineKind::Comment);
        }
        self.block(indent + 1, 1);
    }
}

/// A random, syntactically valid Python module.
pub fn generate_program(seed: u64) -> Generated {
    let mut r = rng(seed);
    let mut g = Gen {
        rng: &mut r,
        src: String::new(),
        kinds: Vec::new(),
        counter: 0,
    };
    if g.rng.random_bool(0.5) {
        g.line(0, "\"\"\"Module docstring.\"\"\"", LineKind::Comment);
    }
    g.line(0, "import os", LineKind::Code);
    g.line(0, "LIMIT = 500", LineKind::Code);
    let items = g.rng.random_range(1..5);
    for _ in 0..items {
        g.line(0, "", LineKind::Blank);
        if g.rng.random_bool(0.3) {
            g.line(0, "# section", LineKind::Comment);
        }
        if g.rng.random_bool(0.4) {
            let head = format!("class C{}(object):", g.counter);
            g.line(0, &head, LineKind::Code);
            for m in 0..g.rng.random_range(1..4) {
                if m > 0 {
                    g.line(0, "", LineKind::Blank);
                }
                g.function(1);
            }
        } else {
            g.function(0);
        }
    }
    Generated {
        source: g.src,
        kinds: g.kinds,
    }
}

pub fn check_generated_programs(count: u64) -> Check {
    for seed in 0..count {
        let program = generate_program(seed);
        let path = format!("gen_{seed}.py");
        let parsed = parse_source(&path, &program.source)
            .map_err(|e| format!("seed {seed}: {e}\n{}", program.source))?;
        ensure!(!parsed.has_errors(), "seed {seed}: parse errors {:?}", parsed.errors());
        let summary = FileSummary::of(&parsed);
        let project = ProjectIndex::build([(path.as_str(), &summary)]);
        let rows = file_method_rows(&path, &parsed, &project);
        ensure!(!rows.is_empty(), "seed {seed}: no methods found");
        let count_kind = |lo: usize, hi: usize, k: LineKind| {
            program.kinds[lo - 1..hi].iter().filter(|&&x| x == k).count() as f64
        };
        let n = program.kinds.len();
        for row in &rows {
            let m = &row.metrics;
            let ctx = format!("seed {seed} {}", row.qualified_name);
            ensure!(m.value("HV") == m.value("HDOP") + m.value("HDND"), "{ctx}: HV");
            ensure!(m.value("HL") == m.value("HTOP") + m.value("HTOA"), "{ctx}: HL");
            ensure!(
                close(m.value("HVOL"), m.value("HL") * m.value("HV").log2(), 1e-9),
                "{ctx}: HVOL"
            );
            // method lines partition into code, blank and comment lines
            let (lo, hi) = row.span;
            let code = count_kind(lo, hi, LineKind::Code);
            let blank = count_kind(lo, hi, LineKind::Blank);
            let comment = count_kind(lo, hi, LineKind::Comment);
            ensure!(m.value("LOC") == (hi - lo + 1) as f64, "{ctx}: LOC");
            ensure!(m.value("BLOC") == blank, "{ctx}: BLOC {} vs {blank}", m.value("BLOC"));
            ensure!(m.value("COMLOC") == comment, "{ctx}: COMLOC {} vs {comment}", m.value("COMLOC"));
            ensure!(
                m.value("LOC") == code + blank + comment,
                "{ctx}: LOC is not code + blank + comment"
            );
            // file slice
            ensure!(m.value("F-TLOC") == n as f64, "{ctx}: F-TLOC");
            ensure!(m.value("F-CLOC") == count_kind(1, n, LineKind::Code), "{ctx}: F-CLOC");
            ensure!(m.value("F-BLOC") == count_kind(1, n, LineKind::Blank), "{ctx}: F-BLOC");
            ensure!(
                m.value("F-COMLOC") == count_kind(1, n, LineKind::Comment),
                "{ctx}: F-COMLOC"
            );
            ensure!(
                m.value("F-TLOC") == m.value("F-CLOC") + m.value("F-BLOC") + m.value("F-COMLOC"),
                "{ctx}: file partition"
            );
        }
    }
    Ok(())
}

pub fn check_product_metrics() -> Check {
    check_golden_file()?;
    check_generated_programs(100)
}

// ---------------------------------------------------------------- process metrics

pub const ANN: (&str, &str) = ("Ann Lee", "ann@example.org");
pub const BEN: (&str, &str) = ("Ben Ito", "ben@example.org");

const F_V1: &str = "def f(x):\n    y = x + 1\n    return y\n";
const F_V2: &str = "def f(x):\n    # guard\n    y = x + 1\n    if y > 10:\n        y = 10\n    return y\n";
const F_V3: &str = "def f(x):\n    # guard\n    y = x + 2\n    if y > 10:\n        y = 10\n    return y\n";
const G_V1: &str = "def g():\n    return 0\n";
const G_V2: &str = "def g():\n    return 1\n";

fn module(f: &str, g: &str) -> String {
    format!("{f}\n\n{g}")
}

/// Five commits by two authors with one rename. Returns the repository and
/// the id of the last commit, which is the cutoff.
pub fn process_fixture(root: &Path) -> resfault::Result<(ScriptedRepo, String)> {
    let repo = ScriptedRepo::init(root)?;
    repo.commit(ANN, EPOCH, "Add module", &[write("a.py", &module(F_V1, G_V1))])?;
    repo.commit(
        BEN,
        EPOCH + 2 * DAY,
        "Fix overflow bug",
        &[write("a.py", &module(F_V2, G_V1)), write("notes.txt", "one\ntwo\n")],
    )?;
    repo.commit(ANN, EPOCH + 5 * DAY, "Move module", &[rename("a.py", "b.py")])?;
    repo.commit(BEN, EPOCH + 6 * DAY, "Tweak g", &[write("b.py", &module(F_V2, G_V2))])?;
    let cutoff = repo.commit(
        ANN,
        EPOCH + 9 * DAY,
        "fix off by one",
        &[write("b.py", &module(F_V3, G_V2))],
    )?;
    Ok((repo, cutoff))
}

/// The process metrics of `b.py::f` at the cutoff, worked out by hand.
///
/// Touches of f: c1 (Ann, day 0, +3), c2 (Ben, day 2, +3 incl. one comment
/// line), c5 (Ann, day 9, +1 -1). The rename and the edit of g leave f's text
/// unchanged. Whole-commit line counts: c1 +7, c2 +3 +2 (notes.txt), c5 +1 -1.
pub fn expected_process_table() -> BTreeMap<&'static str, f64> {
    let ade_ann = 0.4 * (2.0 / 3.0) + 0.3 * 1.0 + 0.3 * 1.0;
    let ade_ben = 0.4 * (1.0 / 3.0) + 0.3 * 0.0 + 0.3 * (-7.0f64 / 365.0).exp();
    BTreeMap::from([
        ("AGE", 9.0),
        ("BD", 2.0 / 6.0),
        ("FC", 2.0),
        ("ACCH", 8.0 / 3.0),
        ("MCCH", 3.0),
        ("TCCH", 8.0),
        ("TMS", 7.0),
        ("TC", 3.0),
        ("CMC", 5.0),
        ("MCLC", 7.0),
        ("ACLC", 14.0 / 3.0),
        ("TCC", 14.0),
        ("CCA", 13.0),
        ("CCD", 1.0),
        ("CPC", 3.0),
        ("MCA", 7.0),
        ("MCD", 1.0),
        ("TMC", 8.0),
        ("AMLC", 7.0 / 3.0),
        ("MMLC", 3.0),
        ("DA", 2.0),
        ("ADE", (ade_ann + ade_ben) / 2.0),
        ("DCN", 2.0),
        ("ACA", 1.5),
        ("ACCA", 4.0),
    ])
}

fn fixture_metrics(repo: &Path, cutoff: &str) -> Result<ProcessMetrics, String> {
    let slice = build_history_slice(repo, &Target::new("b.py", "f"), cutoff).map_err(|e| e.to_string())?;
    Ok(process_metrics(&slice, &KeywordSet::default()))
}

pub fn check_process_metrics() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (repo, cutoff) = process_fixture(dir.path()).map_err(|e| e.to_string())?;
    let got = fixture_metrics(repo.path(), &cutoff)?;
    let expected = expected_process_table();
    ensure!(expected.len() == 25, "table has {} rows", expected.len());
    for (name, want) in &expected {
        let v = got.value(name);
        ensure!(close(v, *want, 1e-12), "{name}: got {v}, expected {want}");
    }

    // later history must not change anything measured at the cutoff
    repo.commit(BEN, EPOCH + 12 * DAY, "fix again", &[write("b.py", &module(F_V1, G_V1))])
        .map_err(|e| e.to_string())?;
    repo.commit(
        ("Cy Park", "cy@example.org"),
        EPOCH + 15 * DAY,
        "bug: move it",
        &[rename("b.py", "c.py"), write("notes.txt", "three\n")],
    )
    .map_err(|e| e.to_string())?;
    let again = fixture_metrics(repo.path(), &cutoff)?;
    ensure!(again == got, "post-cutoff commits changed the metrics: {again:?} vs {got:?}");
    Ok(())
}

// ---------------------------------------------------------------- naturalness

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

pub fn check_entropy_oracle() -> Check {
    // bigram, k = 1; vocabulary {a, b, </s>} gives 4 slots
    let corpus = vec![toks("<s> a b </s>"), toks("<s> a a </s>")];
    let model = train_ngram(&corpus, 2, Smoothing::AddK(1.0)).map_err(|e| e.to_string())?;
    // P(a|<s>) = 3/6, P(b|a) = 2/7, P(a|b) = 1/5, P(</s>|a) = 2/7
    let want = -((0.5f64).log2() + (2.0f64 / 7.0).log2() + (0.2f64).log2() + (2.0f64 / 7.0).log2()) / 4.0;
    let got = cross_entropy(&model, &toks("<s> a b a </s>"));
    ensure!(close(got, want, 1e-9), "held-out snippet: {got} vs {want}");
    // unseen token c and an unseen context
    let want = -((1.0f64 / 6.0).log2() + (0.25f64).log2()) / 2.0;
    let got = cross_entropy(&model, &toks("<s> c </s>"));
    ensure!(close(got, want, 1e-9), "unseen token: {got} vs {want}");
    Ok(())
}

/// ENT over random corpora and random inputs. Returns the first input whose
/// entropy leaves `[0, log2(|V|+1)]`, if any.
pub fn entropy_bound_counterexample(trials: u64) -> Option<String> {
    let mut r = rng(11);
    let alphabet = ["a", "b", "c", "d", "e", "f"];
    for trial in 0..trials {
        let order = r.random_range(1..=4);
        let k = [0.01, 0.1, 0.5, 1.0][r.random_range(0..4)];
        let width = r.random_range(2..=alphabet.len());
        let seq = |r: &mut ChaCha8Rng, len: usize| {
            let mut s = vec!["<s>".to_string()];
            s.extend((0..len).map(|_| alphabet[r.random_range(0..width)].to_string()));
            s.push("</s>".to_string());
            s
        };
        let corpus: Vec<Vec<String>> = (0..r.random_range(1..6))
            .map(|_| {
                let len = r.random_range(0..20);
                seq(&mut r, len)
            })
            .collect();
        let model = train_ngram(&corpus, order, Smoothing::AddK(k)).expect("valid corpus");
        let bound = (model.vocabulary().len() as f64 + 1.0).log2();
        let len = r.random_range(0..20);
        let input = if r.random_bool(0.5) {
            corpus[r.random_range(0..corpus.len())].clone()
        } else {
            seq(&mut r, len)
        };
        let ent = cross_entropy(&model, &input);
        if !(0.0..=bound + 1e-12).contains(&ent) {
            return Some(format!(
                "trial {trial}: ENT {ent:.4} outside [0, {bound:.4}] for {:?} (order {order}, k {k})",
                input.join(" ")
            ));
        }
    }
    None
}

pub fn check_entropy() -> Check {
    check_entropy_oracle()?;
    match entropy_bound_counterexample(2000) {
        None => Ok(()),
        Some(msg) => Err(msg),
    }
}

// ---------------------------------------------------------------- learners

/// Labels are `1` when `w·x > 0`; points within 0.25 of the boundary are
/// redrawn, so the classes are separable with a margin.
pub fn separable_data(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut r = rng(seed);
    let w: Vec<f64> = (0..d).map(|j| if j < 3 { 1.0 } else { 0.0 }).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while rows.len() < n {
        let x: Vec<f64> = (0..d).map(|_| normal(&mut r)).collect();
        let s: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        if s.abs() < 0.25 {
            continue;
        }
        labels.push((s > 0.0) as u8);
        rows.push(x);
    }
    (rows, labels)
}

fn matrix(rows: &[Vec<f64>], labels: Option<&[u8]>) -> FeatureMatrix {
    let columns = (0..rows[0].len()).map(|j| format!("x{j}")).collect();
    FeatureMatrix::new(columns, rows.to_vec(), labels.map(<[u8]>::to_vec)).expect("valid matrix")
}

fn f1_of(preds: &[u8], labels: &[u8]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (&p, &y) in preds.iter().zip(labels) {
        match (p, y) {
            (1, 1) => tp += 1.0,
            (1, 0) => fp += 1.0,
            (0, 1) => fn_ += 1.0,
            _ => {}
        }
    }
    2.0 * tp / (2.0 * tp + fp + fn_)
}

pub fn forest_config() -> ForestConfig {
    ForestConfig {
        n_trees: 100,
        seed: 5,
        ..ForestConfig::default()
    }
}

pub fn boost_config() -> BoostConfig {
    BoostConfig {
        n_rounds: 150,
        seed: 5,
        ..BoostConfig::default()
    }
}

fn supervised(train: &FeatureMatrix) -> Result<Vec<ModelFile>, String> {
    let rf = train_random_forest(train, &forest_config()).map_err(|e| e.to_string())?;
    let gbt = train_gbt(train, &boost_config()).map_err(|e| e.to_string())?;
    Ok(vec![
        ModelFile::new(Model::RandomForest(rf), train.columns(), None, 5),
        ModelFile::new(Model::GradientBoosting(gbt), train.columns(), None, 5),
    ])
}

/// Blob of 200 normal points in 4 dimensions plus one far point at index 200.
pub fn blob_with_outlier() -> Vec<Vec<f64>> {
    let mut r = rng(3);
    let mut rows: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| normal(&mut r)).collect()).collect();
    rows.push(vec![8.0, -8.0, 8.0, 8.0]);
    rows
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

pub fn check_learners() -> Check {
    let (rows, labels) = separable_data(2000, 10, 2024);
    let (train_rows, test_rows) = rows.split_at(1500);
    let (train_y, test_y) = labels.split_at(1500);
    let train = matrix(train_rows, Some(train_y));
    let test = matrix(test_rows, Some(test_y));
    let models = supervised(&train)?;
    for m in &models {
        let preds = m.predict(&test, 0.5).map_err(|e| e.to_string())?;
        let f1 = f1_of(&preds, test_y);
        ensure!(f1 >= 0.95, "{}: held-out F1 {f1:.4} < 0.95", m.model.kind());
    }
    let again = supervised(&train)?;
    for (a, b) in models.iter().zip(&again) {
        let (ja, jb) = (a.to_json().map_err(|e| e.to_string())?, b.to_json().map_err(|e| e.to_string())?);
        ensure!(ja == jb, "{}: retraining is not byte-identical", a.model.kind());
    }

    let blob = blob_with_outlier();
    let x = matrix(&blob, None);
    let iso = fit_isolation_forest(&x, &IsolationConfig { seed: 9, ..IsolationConfig::default() })
        .map_err(|e| e.to_string())?;
    let scores: Vec<f64> = blob.iter().map(|r| iso.anomaly_score(r)).collect();
    ensure!(argmax(&scores) == 200, "isolation forest ranks row {} first", argmax(&scores));
    let lof = fit_lof(&x, 10).map_err(|e| e.to_string())?;
    let scores: Vec<f64> = (0..blob.len()).map(|i| lof.training_score(i)).collect();
    ensure!(argmax(&scores) == 200, "LOF ranks row {} first", argmax(&scores));
    Ok(())
}

// ---------------------------------------------------------------- Shapley

/// Exact interventional Shapley values: for each background row `z`,
/// `v(S) = f(x_S, z_rest)`, enumerated over all 2^d coalitions, then averaged
/// over the background.
pub fn exact_shapley<S: Scorer>(model: &S, x: &[f64], background: &[Vec<f64>]) -> Vec<f64> {
    let d = x.len();
    let mut fact = vec![1.0f64; d + 1];
    for i in 1..=d {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut phi = vec![0.0; d];
    for z in background {
        let value: Vec<f64> = (0..1usize << d)
            .map(|mask| {
                let row: Vec<f64> = (0..d).map(|j| if mask >> j & 1 == 1 { x[j] } else { z[j] }).collect();
                model.score(&row)
            })
            .collect();
        for (j, p) in phi.iter_mut().enumerate() {
            for mask in 0..1usize << d {
                if mask >> j & 1 == 1 {
                    continue;
                }
                let s = mask.count_ones() as usize;
                let w = fact[s] * fact[d - s - 1] / fact[d];
                *p += w * (value[mask | 1 << j] - value[mask]);
            }
        }
    }
    phi.iter_mut().for_each(|v| *v /= background.len() as f64);
    phi
}

pub fn shapley_setup() -> (Model, Vec<f64>, Vec<Vec<f64>>) {
    let mut r = rng(21);
    let d = 8;
    let rows: Vec<Vec<f64>> = (0..600).map(|_| (0..d).map(|_| normal(&mut r)).collect()).collect();
    let labels: Vec<u8> = rows
        .iter()
        .map(|x| (x[0] + 0.8 * x[1] - 0.6 * x[2] + 0.5 * x[3] * x[4] + 0.3 * normal(&mut r) > 0.0) as u8)
        .collect();
    let train = matrix(&rows, Some(&labels));
    let model = train_gbt(
        &train,
        &BoostConfig {
            n_rounds: 60,
            max_depth: 3,
            seed: 1,
            ..BoostConfig::default()
        },
    )
    .expect("training succeeds");
    let background: Vec<Vec<f64>> = rows[..10].to_vec();
    let x = rows[100].clone();
    (Model::GradientBoosting(model), x, background)
}

pub fn check_shapley() -> Check {
    let (model, x, background) = shapley_setup();
    let exact = exact_shapley(&model, &x, &background);
    let bg = matrix(&background, None);
    let mc = shapley_mc(&model, &x, &bg, 50_000, 17).map_err(|e| e.to_string())?;
    let mae = mc.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>() / x.len() as f64;
    ensure!(mae < 0.01, "MAE {mae:.5} against exact enumeration");
    let mean_bg = background.iter().map(|z| model.score(z)).sum::<f64>() / background.len() as f64;
    let residual = (mc.iter().sum::<f64>() - (model.score(&x) - mean_bg)).abs();
    ensure!(residual < 0.01, "efficiency residual {residual}");
    let exact_residual = (exact.iter().sum::<f64>() - (model.score(&x) - mean_bg)).abs();
    ensure!(exact_residual < 1e-9, "oracle efficiency residual {exact_residual}");
    Ok(())
}

// ---------------------------------------------------------------- McNemar

pub fn check_mcnemar() -> Check {
    let r = mcnemar_from_counts(10, 0);
    ensure!(r.method == McNemarMethod::Exact, "(10, 0) did not use the exact test");
    let want = 2.0 * 0.5f64.powi(10);
    ensure!(close(r.p_value, want, 1e-12), "p(10, 0) = {} vs {want}", r.p_value);

    let mut g = rng(99);
    for i in 0..300 {
        let n = g.random_range(1..400);
        let flip = g.random_range(0.0..0.5);
        let labels: Vec<u8> = (0..n).map(|_| g.random_range(0..2)).collect();
        let noisy = |g: &mut ChaCha8Rng| -> Vec<u8> {
            labels.iter().map(|&y| if g.random_bool(flip) { 1 - y } else { y }).collect()
        };
        let a = noisy(&mut g);
        let b = noisy(&mut g);
        let ab = mcnemar(&a, &b, &labels).map_err(|e| e.to_string())?;
        let ba = mcnemar(&b, &a, &labels).map_err(|e| e.to_string())?;
        ensure!(ab.p_value == ba.p_value, "fixture {i}: p(A,B) {} != p(B,A) {}", ab.p_value, ba.p_value);
        ensure!((ab.b, ab.c) == (ba.c, ba.b), "fixture {i}: discordant counts not swapped");
    }
    Ok(())
}

// ---------------------------------------------------------------- representation

pub fn check_representation() -> Check {
    let mut g = rng(4);
    // orthonormal loadings on generic data
    let x: Vec<Vec<f64>> = (0..300)
        .map(|_| {
            let base: Vec<f64> = (0..6).map(|_| normal(&mut g)).collect();
            (0..12).map(|j| base[j % 6] * (j as f64 + 1.0) + 0.3 * normal(&mut g)).collect()
        })
        .collect();
    let space = pca_fit(&x, 1.0).map_err(|e| e.to_string())?;
    let k = space.k();
    for a in 0..k {
        for b in 0..k {
            let dot: f64 = space.loadings.iter().map(|row| row[a] * row[b]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            ensure!(close(dot, want, 1e-8), "loadings {a}·{b} = {dot}");
        }
    }
    // rank-1 data needs exactly one component
    let v = [0.5, -1.0, 2.0, 0.25, 3.0];
    let rank1: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let t = normal(&mut g);
            v.iter().map(|c| c * t).collect()
        })
        .collect();
    let space = pca_fit(&rank1, 0.95).map_err(|e| e.to_string())?;
    ensure!(space.k() == 1, "rank-1 data kept {} components", space.k());
    let space = pca_fit(&rank1, 1.0).map_err(|e| e.to_string())?;
    ensure!(space.k() == 1, "rank-1 data kept {} components at threshold 1", space.k());

    // identical inputs correlate perfectly, independent ones barely
    let a: Vec<Vec<f64>> = (0..500).map(|_| (0..4).map(|_| normal(&mut g)).collect()).collect();
    let same = cca(&a, &a, 4, 0.0).map_err(|e| e.to_string())?;
    for (i, rho) in same.correlations.iter().enumerate() {
        ensure!(close(*rho, 1.0, 1e-9), "identical inputs: rho{} = {rho}", i + 1);
    }
    let a: Vec<Vec<f64>> = (0..2000).map(|_| (0..3).map(|_| normal(&mut g)).collect()).collect();
    let b: Vec<Vec<f64>> = (0..2000).map(|_| (0..3).map(|_| normal(&mut g)).collect()).collect();
    let indep = cca(&a, &b, 3, resfault::repr::DEFAULT_RIDGE).map_err(|e| e.to_string())?;
    let rho1 = indep.correlations[0];
    ensure!(rho1.abs() < 0.15, "independent inputs: rho1 = {rho1}");
    Ok(())
}

// ---------------------------------------------------------------- end to end

pub fn pipeline_config(repo: &resfault::scripted::DemoProject, out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        out: out.to_path_buf(),
        split_ratio: 0.7,
        repos: vec![RepoConfig {
            path: repo.repo.clone(),
            issues: Some(repo.issues.clone()),
            contributors: Some(repo.contributors.clone()),
        }],
        ..PipelineConfig::default()
    };
    cfg.models.random_forest.n_trees = 50;
    cfg.models.gradient_boosting.n_rounds = 50;
    cfg.models.local_outlier_factor.k = 3;
    cfg.evaluate.bootstrap = 200;
    cfg.explain.shapley_samples = 100;
    cfg
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let Ok(entries) = fs::read_dir(dir) else { return };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if let Ok(bytes) = fs::read(&path) {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, bytes);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn check_end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let demo = demo_project(&dir.path().join("demo")).map_err(|e| e.to_string())?;
    let out = dir.path().join("out");
    let run = || -> Result<BTreeMap<String, Vec<u8>>, String> {
        let _ = fs::remove_dir_all(&out);
        let pipeline = Pipeline::new(pipeline_config(&demo, &out)).map_err(|e| e.to_string())?;
        pipeline.run().map_err(|e| e.to_string())?;
        Ok(snapshot(&out))
    };
    let first = run()?;
    let second = run()?;
    for name in ["dataset.csv", "models/random_forest.json", "eval_report.json", "manifest.json"] {
        ensure!(first.contains_key(name), "run produced no {name}");
    }
    ensure!(
        first.keys().eq(second.keys()),
        "runs wrote different files: {:?} vs {:?}",
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &first {
        ensure!(second[name] == *bytes, "{name} differs between runs");
    }

    let load = |name: &str| -> Result<Dataset, String> {
        let table = Table::parse(&String::from_utf8_lossy(&first[name])).map_err(|e| e.to_string())?;
        Dataset::from_table(&table).map_err(|e| e.to_string())
    };
    let (train, test) = (load("train.csv")?, load("test.csv")?);
    ensure!(!train.rows.is_empty() && !test.rows.is_empty(), "empty split");
    assert_no_leakage(&train, &test).map_err(|e| e.to_string())?;
    let train_commits: std::collections::BTreeSet<_> =
        train.rows.iter().map(|r| (&r.repo_id, &r.commit_id)).collect();
    ensure!(
        test.rows.iter().all(|r| !train_commits.contains(&(&r.repo_id, &r.commit_id))),
        "a commit appears on both sides of the split"
    );
    Ok(())
}

/// Acceptance criteria in report order.
pub fn criteria() -> Vec<(&'static str, fn() -> Check)> {
    vec![
        ("metric arithmetic reproduction", check_metric_arithmetic as fn() -> Check),
        ("labeling fixture suite", check_labeling_fixtures),
        ("product metric golden file and invariants", check_product_metrics),
        ("process metric oracle", check_process_metrics),
        ("entropy oracle", check_entropy),
        ("learner sanity", check_learners),
        ("Shapley oracle", check_shapley),
        ("McNemar oracle", check_mcnemar),
        ("representation procedure", check_representation),
        ("end-to-end determinism", check_end_to_end),
    ]
}

/// Shorthand used by tests: panic with the check's message.
pub fn must(check: Check) {
    if let Err(msg) = check {
        panic!("{msg}");
    }
}

//! Product and Python-specific metrics at method, class and file level.
//!
//! Line conventions: a line is *code* if it carries any program token,
//! *comment* if it carries only comments or docstring text, and *blank*
//! otherwise. Lines mixing code and a trailing comment count as code (and as
//! CLWB lines). Ratios with a zero denominator are 0.

pub mod control;
pub mod halstead;
pub mod index;
pub mod normalize;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::catalog::{product_columns, PRODUCT_COUNT};
use crate::python::{ParsedFile, StmtId, StmtKind, SyntaxUnit, TokenKind, UnitKind};
pub use control::NP_CAP;
pub use halstead::{maintainability_index, Halstead};
pub use index::{FileSummary, ProjectIndex};
pub use normalize::{normalize_code, Normalized};

/// Named metric values in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics(pub Vec<(&'static str, f64)>);

impl Metrics {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }

    /// Like [`Metrics::get`] but panics on unknown names; for tests and examples.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("no metric named {name}"))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.0.iter().map(|(n, _)| *n).collect()
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Line category counts over an inclusive 1-based span.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LineStats {
    pub total: usize,
    pub code: usize,
    pub blank: usize,
    pub comment: usize,
    /// Code lines that also carry a comment.
    pub mixed: usize,
    pub decl: usize,
    pub exec: usize,
}

pub fn line_stats(file: &ParsedFile, span: (usize, usize)) -> LineStats {
    let mut s = LineStats::default();
    if span.1 < span.0 {
        return s;
    }
    for info in file.lines.iter().take(span.1).skip(span.0 - 1) {
        s.total += 1;
        if info.code {
            s.code += 1;
            s.mixed += info.comment as usize;
            s.decl += info.decl as usize;
            s.exec += info.exec as usize;
        } else if info.comment {
            s.comment += 1;
        } else {
            s.blank += 1;
        }
    }
    s
}

/// Statement counts: (all, declarations, executable). Each clause header of
/// a compound statement counts once; docstrings do not count.
pub fn statement_counts(file: &ParsedFile, roots: &[StmtId]) -> (usize, usize, usize) {
    let (mut decl, mut exec) = (0, 0);
    for id in file.tree.walk(roots) {
        let s = file.tree.stmt(id);
        if s.kind == StmtKind::Docstring {
            continue;
        }
        let n = s.clauses.len().max(1);
        if s.kind.is_declaration() {
            decl += n;
        } else {
            exec += n;
        }
    }
    (decl + exec, decl, exec)
}

fn scope_id(unit: &SyntaxUnit) -> StmtId {
    unit.stmt.expect("method and class units carry their statement")
}

/// Parameter names of a `def` header.
pub fn parameters(file: &ParsedFile, unit: &SyntaxUnit) -> Vec<String> {
    let header = file.tree.stmt(scope_id(unit)).tokens.clone();
    let toks: Vec<usize> = header.filter(|&i| file.token(i).is_significant()).collect();
    let Some(open) = toks.iter().position(|&i| file.token(i).is_op("(")) else {
        return Vec::new();
    };
    let mut params = Vec::new();
    let mut depth = 0;
    let mut expect_name = true;
    for &i in &toks[open + 1..] {
        let t = file.token(i);
        if t.kind == TokenKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" if depth == 0 => break,
                ")" | "]" | "}" => depth -= 1,
                "," if depth == 0 => expect_name = true,
                _ => {}
            }
            continue;
        }
        if expect_name && depth == 0 && t.kind == TokenKind::Name {
            params.push(t.text.clone());
            expect_name = false;
        }
    }
    params
}

/// Method-level metrics except the coupling ones (see [`coupling_metrics`]).
pub fn method_metrics(file: &ParsedFile, unit: &SyntaxUnit) -> Metrics {
    assert_eq!(unit.kind, UnitKind::Method);
    let id = scope_id(unit);
    let body = file.tree.body(id).to_vec();
    let own_tokens = file.scope_tokens(id);
    let own_stmts = file.tree.walk_own(&body);

    let cc = control::cyclomatic(file, &own_tokens, &own_stmts) as f64;
    let mnd = control::max_nesting(file, &body, false) as f64;
    let np = control::path_count(file, &body);
    let h = Halstead::from_tokens(own_tokens.iter().map(|&i| file.token(i)));
    let lines = line_stats(file, unit.span);
    let (stmt, dstmt, estmt) = statement_counts(file, &[id]);

    let exits: Vec<StmtId> = own_stmts
        .iter()
        .copied()
        .filter(|&s| file.tree.stmt(s).kind.is_exit())
        .collect();
    let outputs: BTreeSet<String> = exits
        .iter()
        .filter(|&&s| file.tree.stmt(s).kind == StmtKind::Return)
        .map(|&s| {
            let r = file.tree.stmt(s).tokens.clone();
            let text = file.text_of(r.start + 1..r.end);
            if text.is_empty() {
                "None".to_string()
            } else {
                text
            }
        })
        .collect();
    let last_line = body.last().map_or(0, |&s| file.tree.stmt(s).first_line);
    let early = exits
        .iter()
        .filter(|&&s| file.tree.stmt(s).first_line < last_line)
        .count();

    let loc = lines.total as f64;
    let code = lines.code as f64;
    Metrics(vec![
        ("CC", cc),
        ("MND", mnd),
        ("NP", np),
        ("HD", h.difficulty()),
        ("HL", h.length()),
        ("HV", h.vocabulary()),
        ("HVOL", h.volume()),
        ("HEFF", h.effort()),
        ("HMI", maintainability_index(h.volume(), cc, loc)),
        ("HDOP", h.hdop as f64),
        ("HDND", h.hdnd as f64),
        ("HTOP", h.htop as f64),
        ("HTOA", h.htoa as f64),
        ("LOC", loc),
        ("BLOC", lines.blank as f64),
        ("DLOC", lines.decl as f64),
        ("ELOC", lines.exec as f64),
        ("STMT", stmt as f64),
        ("DSTMT", dstmt as f64),
        ("ESTMT", estmt as f64),
        ("NIN", parameters(file, unit).len() as f64),
        ("NOUT", outputs.len() as f64),
        ("NE", exits.len() as f64),
        ("NEE", early as f64),
        ("COMLOC", lines.comment as f64),
        ("CCR", ratio(lines.comment as f64, code)),
        ("CLWB", lines.mixed as f64),
        ("CCR-B", ratio(lines.mixed as f64, code)),
    ])
}

/// FI, FO and CR (taken equal to FI) for a method.
pub fn coupling_metrics(
    path: &str,
    file: &ParsedFile,
    unit: &SyntaxUnit,
    project: &ProjectIndex,
) -> Metrics {
    let summary = index::MethodSummary {
        qualified_name: unit.qualified_name.clone(),
        name: unit.name.clone(),
        calls: index::calls(file, unit),
    };
    let fi = project.fan_in(path, &summary) as f64;
    let fo = project.fan_out(&summary) as f64;
    Metrics(vec![("FI", fi), ("FO", fo), ("CR", fi)])
}

/// Names bound by the assignment targets of a simple statement, as token
/// index slices (one per target expression).
fn assignment_targets(file: &ParsedFile, id: StmtId) -> Vec<Vec<usize>> {
    let s = file.tree.stmt(id);
    let toks: Vec<usize> = s
        .tokens
        .clone()
        .filter(|&i| file.token(i).is_significant())
        .collect();
    let mut segments: Vec<Vec<usize>> = vec![Vec::new()];
    let mut depth = 0;
    let mut annotated = false;
    let mut augmented = false;
    for &i in &toks {
        let t = file.token(i);
        if t.is_name("lambda") && depth == 0 {
            break;
        }
        if t.kind == TokenKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                "=" if depth == 0 => {
                    segments.push(Vec::new());
                    continue;
                }
                ":" if depth == 0 && segments.len() == 1 => {
                    annotated = true;
                    segments.push(Vec::new());
                    continue;
                }
                op if depth == 0 && op.len() >= 2 && op.ends_with('=') && !matches!(op, "==" | "<=" | ">=" | "!=") => {
                    augmented = true;
                    segments.push(Vec::new());
                    continue;
                }
                _ => {}
            }
        }
        segments.last_mut().unwrap().push(i);
    }
    if annotated || augmented {
        segments.truncate(1);
        return segments;
    }
    if segments.len() < 2 {
        return Vec::new();
    }
    segments.pop();
    segments
}

fn ends_binding(file: &ParsedFile, seg: &[usize], pos: usize) -> bool {
    seg.get(pos + 1)
        .is_none_or(|&n| matches!(file.token(n).text.as_str(), "," | ")" | "]"))
}

/// NIV: `self.x` targets assigned in `__init__` plus names bound directly in
/// the class body to something other than a lambda.
pub fn instance_variables(file: &ParsedFile, unit: &SyntaxUnit) -> usize {
    let mut names = BTreeSet::new();
    let class_body = file.tree.body(scope_id(unit)).to_vec();
    for id in file.tree.walk_own(&class_body) {
        let stmt = file.tree.stmt(id);
        if stmt.kind != StmtKind::Simple {
            continue;
        }
        let binds_lambda = stmt
            .tokens
            .clone()
            .skip(1)
            .any(|i| file.token(i).is_name("lambda") && file.token(i - 1).is_op("="));
        if binds_lambda {
            continue;
        }
        for seg in assignment_targets(file, id) {
            for (p, &i) in seg.iter().enumerate() {
                let t = file.token(i);
                let after_dot = p > 0 && file.token(seg[p - 1]).is_op(".");
                if t.kind == TokenKind::Name && !t.is_keyword() && !after_dot && ends_binding(file, &seg, p) {
                    names.insert(t.text.clone());
                }
            }
        }
    }
    if let Some(init) = unit
        .children
        .iter()
        .find(|c| c.kind == UnitKind::Method && c.name == "__init__")
    {
        let receiver = parameters(file, init)
            .into_iter()
            .next()
            .unwrap_or_else(|| "self".into());
        let body = file.tree.body(scope_id(init)).to_vec();
        for id in file.tree.walk_own(&body) {
            if file.tree.stmt(id).kind != StmtKind::Simple {
                continue;
            }
            for seg in assignment_targets(file, id) {
                for p in 2..seg.len() {
                    let (recv, dot, name) = (file.token(seg[p - 2]), file.token(seg[p - 1]), file.token(seg[p]));
                    let starts = p < 3 || !file.token(seg[p - 3]).is_op(".");
                    if starts
                        && recv.is_name(&receiver)
                        && dot.is_op(".")
                        && name.kind == TokenKind::Name
                        && ends_binding(file, &seg, p)
                    {
                        names.insert(format!("self.{}", name.text));
                    }
                }
            }
        }
    }
    names.len()
}

/// Class-level metrics.
pub fn class_metrics(path: &str, file: &ParsedFile, unit: &SyntaxUnit, project: &ProjectIndex) -> Metrics {
    assert_eq!(unit.kind, UnitKind::Class);
    let lines = line_stats(file, unit.span);
    let nom = unit.methods().len() as f64;
    let nom_a = unit
        .children
        .iter()
        .filter(|c| c.kind == UnitKind::Method)
        .count() as f64;
    let summary = index::ClassSummary {
        qualified_name: unit.qualified_name.clone(),
        name: unit.name.clone(),
        bases: index::base_classes(file, unit),
    };
    Metrics(vec![
        ("CLLOC", lines.total as f64),
        ("CCODE", lines.code as f64),
        ("CDLOC", lines.decl as f64),
        ("CELOC", lines.exec as f64),
        ("NOM", nom),
        ("NOM-A", nom_a),
        ("NIV", instance_variables(file, unit) as f64),
        ("CCOM", lines.comment as f64),
        ("CCR-C", ratio(lines.comment as f64, lines.code as f64)),
        ("DIT", project.depth_of_inheritance(path, &summary) as f64),
        ("BCs", summary.bases.len() as f64),
        ("DCs", project.derived_classes(&summary) as f64),
    ])
}

/// File-level metrics. F-CC and F-NPLOG aggregate over every method.
pub fn file_metrics(file: &ParsedFile) -> Metrics {
    let lines = line_stats(file, (1, file.line_count()));
    let (mut cc, mut np) = (0.0, 0.0);
    for m in file.root.methods() {
        let id = scope_id(m);
        let body = file.tree.body(id).to_vec();
        let tokens = file.scope_tokens(id);
        cc += control::cyclomatic(file, &tokens, &file.tree.walk_own(&body)) as f64;
        np += control::path_count(file, &body);
    }
    let (stmt, dstmt, estmt) = statement_counts(file, &file.tree.module);
    Metrics(vec![
        ("F-CC", cc),
        ("F-MND", control::max_nesting(file, &file.tree.module, true) as f64),
        ("F-NPLOG", (1.0 + np).log10()),
        ("F-TLOC", lines.total as f64),
        ("F-CLOC", lines.code as f64),
        ("F-BLOC", lines.blank as f64),
        ("F-STMT", stmt as f64),
        ("F-DSTMT", dstmt as f64),
        ("F-ESTMT", estmt as f64),
        ("F-COMLOC", lines.comment as f64),
        ("F-CCR", ratio(lines.comment as f64, lines.code as f64)),
    ])
}

fn is_exempt_number(text: &str) -> bool {
    let t = text.replace('_', "").to_ascii_lowercase();
    if t.ends_with('j') {
        return false;
    }
    let value = if let Some(hex) = t.strip_prefix("0x") {
        i64::from_str_radix(hex, 16).ok().map(|v| v as f64)
    } else if let Some(oct) = t.strip_prefix("0o") {
        i64::from_str_radix(oct, 8).ok().map(|v| v as f64)
    } else if let Some(bin) = t.strip_prefix("0b") {
        i64::from_str_radix(bin, 2).ok().map(|v| v as f64)
    } else {
        t.parse::<f64>().ok()
    };
    matches!(value, Some(v) if v == 0.0 || v == 1.0 || v == 2.0)
}

fn is_constant_name(name: &str) -> bool {
    name.chars().any(|c| c.is_ascii_uppercase())
        && name
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// PMI and PMN for any unit.
///
/// PMI is the deepest block level relative to the unit (a function body is
/// level 1). PMN counts numeric literals other than 0, 1 and 2 (negative
/// literals are a unary minus applied to one of these), skipping module-level
/// `UPPER_CASE = ...` assignments.
pub fn python_specific(file: &ParsedFile, unit: &SyntaxUnit) -> Metrics {
    let (pmi, numbers): (usize, Vec<usize>) = match unit.stmt {
        Some(id) => {
            let base = file.tree.stmt(id).depth;
            let pmi = file
                .tree
                .walk(file.tree.body(id))
                .iter()
                .map(|&s| file.tree.stmt(s).depth - base)
                .max()
                .unwrap_or(0);
            (pmi, file.scope_tokens(id))
        }
        None => {
            let all = file.tree.walk(&file.tree.module);
            let pmi = all.iter().map(|&s| file.tree.stmt(s).depth).max().unwrap_or(0);
            let mut toks = Vec::new();
            for &s in &all {
                let stmt = file.tree.stmt(s);
                let constant = stmt.depth == 0
                    && stmt.kind == StmtKind::Simple
                    && assignment_targets(file, s).iter().any(|seg| {
                        seg.len() == 1 && is_constant_name(&file.token(seg[0]).text)
                    });
                if constant {
                    continue;
                }
                for r in stmt.own_ranges() {
                    toks.extend(r.filter(|&i| !file.docstring_tokens[i]));
                }
            }
            (pmi, toks)
        }
    };
    let pmn = numbers
        .iter()
        .map(|&i| file.token(i))
        .filter(|t| t.kind == TokenKind::Number && !is_exempt_number(&t.text))
        .count();
    Metrics(vec![("PMI", pmi as f64), ("PMN", pmn as f64)])
}

/// Presence bits of [`ProductMetrics::presence`].
pub const HAS_METHOD: u8 = 1;
pub const HAS_CLASS: u8 = 2;
pub const HAS_FILE: u8 = 4;

/// All 56 product metrics of one method, in [`product_columns`] order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductMetrics {
    pub values: Vec<f64>,
    /// Which context slices are real: method, enclosing class, file. Missing
    /// slices are zero-filled.
    pub presence: u8,
}

impl ProductMetrics {
    pub fn get(&self, name: &str) -> Option<f64> {
        product_columns()
            .iter()
            .position(|c| *c == name)
            .map(|i| self.values[i])
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("no product metric named {name}"))
    }
}

/// One method with its full product metric vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRow {
    pub file_path: String,
    pub qualified_name: String,
    pub span: (usize, usize),
    pub metrics: ProductMetrics,
}

/// Product metrics for every method in a parsed file.
pub fn file_method_rows(path: &str, file: &ParsedFile, project: &ProjectIndex) -> Vec<MethodRow> {
    let file_slice = file_metrics(file);
    let columns = product_columns();
    let mut rows = Vec::new();
    let mut class_stack: Vec<(&SyntaxUnit, Metrics)> = Vec::new();
    for unit in file.root.descendants() {
        while class_stack
            .last()
            .is_some_and(|(c, _)| !(c.span.0 <= unit.span.0 && unit.span.1 <= c.span.1))
        {
            class_stack.pop();
        }
        match unit.kind {
            UnitKind::Class => {
                let m = class_metrics(path, file, unit, project);
                class_stack.push((unit, m));
            }
            UnitKind::Method => {
                let mut values = vec![0.0; PRODUCT_COUNT];
                let mut presence = HAS_METHOD | HAS_FILE;
                let mut slices = vec![
                    method_metrics(file, unit),
                    coupling_metrics(path, file, unit, project),
                    file_slice.clone(),
                    python_specific(file, unit),
                ];
                if let Some((_, m)) = class_stack.last() {
                    presence |= HAS_CLASS;
                    slices.push(m.clone());
                }
                for slice in slices {
                    for (name, v) in slice.0 {
                        let i = columns.iter().position(|c| *c == name).unwrap();
                        values[i] = v;
                    }
                }
                rows.push(MethodRow {
                    file_path: path.to_string(),
                    qualified_name: unit.qualified_name.clone(),
                    span: unit.span,
                    metrics: ProductMetrics { values, presence },
                });
            }
            UnitKind::File => {}
        }
    }
    rows
}

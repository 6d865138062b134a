//! Python front end: tokenizer, statement tree and the file/class/method
//! unit hierarchy that metrics are computed over.

pub mod lexer;
pub mod syntax;

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
pub use lexer::{tokenize, Lexed, Token, TokenKind};
pub use syntax::{Clause, ClauseKind, Stmt, StmtId, StmtKind, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    File,
    Class,
    Method,
}

#[derive(Debug, Clone, Serialize)]
pub struct SyntaxUnit {
    pub kind: UnitKind,
    pub name: String,
    /// Dotted path from the file root, e.g. `Outer.Inner.method`. Repeated
    /// definitions of one name get a `#2`, `#3`, ... suffix.
    pub qualified_name: String,
    /// 1-based inclusive line span, decorators included.
    pub span: (usize, usize),
    pub body_text: String,
    pub children: Vec<SyntaxUnit>,
    #[serde(skip)]
    pub stmt: Option<StmtId>,
}

impl SyntaxUnit {
    /// Pre-order iterator over this unit and all descendants.
    pub fn descendants(&self) -> Vec<&SyntaxUnit> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let u = out[i];
            out.extend(u.children.iter());
            i += 1;
        }
        out.sort_by_key(|u| (u.span.0, std::cmp::Reverse(u.span.1)));
        out
    }

    pub fn methods(&self) -> Vec<&SyntaxUnit> {
        self.descendants()
            .into_iter()
            .filter(|u| u.kind == UnitKind::Method)
            .collect()
    }

    pub fn classes(&self) -> Vec<&SyntaxUnit> {
        self.descendants()
            .into_iter()
            .filter(|u| u.kind == UnitKind::Class)
            .collect()
    }
}

/// What a physical line contains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LineInfo {
    pub code: bool,
    /// A comment or docstring is present.
    pub comment: bool,
    /// Carries a declaration (def/class header, decorator, import, global, nonlocal).
    pub decl: bool,
    /// Carries an executable statement.
    pub exec: bool,
}

impl LineInfo {
    pub fn is_blank(&self) -> bool {
        !self.code && !self.comment
    }

    /// Comment-only lines. Lines mixing code and comments count as code.
    pub fn is_comment_only(&self) -> bool {
        self.comment && !self.code
    }
}

#[derive(Debug, Clone)]
pub struct ParsedFile {
    pub path: String,
    pub source: String,
    pub lexed: Lexed,
    pub tree: SyntaxTree,
    /// `lines[i]` describes line `i + 1`.
    pub lines: Vec<LineInfo>,
    /// Token indices that belong to docstrings.
    pub docstring_tokens: Vec<bool>,
    pub root: SyntaxUnit,
}

impl ParsedFile {
    /// Diagnostics from tokenizing and tree building. Metrics are still
    /// computed over whatever was recovered.
    pub fn errors(&self) -> Vec<String> {
        self.lexed
            .errors
            .iter()
            .chain(self.tree.errors.iter())
            .cloned()
            .collect()
    }

    pub fn has_errors(&self) -> bool {
        self.lexed.has_errors() || !self.tree.errors.is_empty()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn token(&self, i: usize) -> &Token {
        &self.lexed.tokens[i]
    }

    /// Token indices belonging to the statement itself, excluding nested
    /// `def`/`class` bodies and docstrings.
    pub fn own_tokens(&self, roots: &[StmtId]) -> Vec<usize> {
        let mut out = Vec::new();
        for id in self.tree.walk_own(roots) {
            self.push_stmt_tokens(id, &mut out);
        }
        out.sort_unstable();
        out
    }

    /// Own tokens of a scope statement: its header plus its body, without
    /// nested scopes.
    pub fn scope_tokens(&self, id: StmtId) -> Vec<usize> {
        let mut out = Vec::new();
        self.push_stmt_tokens(id, &mut out);
        for child in self.tree.walk_own(self.tree.body(id)) {
            self.push_stmt_tokens(child, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn push_stmt_tokens(&self, id: StmtId, out: &mut Vec<usize>) {
        for range in self.tree.stmt(id).own_ranges() {
            out.extend(range.filter(|&i| {
                self.lexed.tokens[i].is_significant() && !self.docstring_tokens[i]
            }));
        }
    }

    pub fn text_of(&self, range: std::ops::Range<usize>) -> String {
        let toks: Vec<&str> = range
            .filter(|&i| self.lexed.tokens[i].is_significant())
            .map(|i| self.lexed.tokens[i].text.as_str())
            .collect();
        toks.join(" ")
    }

    fn span_text(&self, span: (usize, usize)) -> String {
        self.source
            .lines()
            .skip(span.0.saturating_sub(1))
            .take(span.1 + 1 - span.0)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Whether an opening parenthesis after `prev` is a call rather than grouping.
pub fn is_callable_prefix(prev: &Token) -> bool {
    match prev.kind {
        TokenKind::Name => !prev.is_keyword() || lexer::is_literal_keyword(&prev.text),
        TokenKind::Op => matches!(prev.text.as_str(), ")" | "]"),
        TokenKind::String => true,
        _ => false,
    }
}

fn mark_lines(lines: &mut [LineInfo], from: usize, to: usize, f: impl Fn(&mut LineInfo)) {
    for line in from..=to {
        if let Some(info) = lines.get_mut(line.wrapping_sub(1)) {
            f(info);
        }
    }
}

/// Parse a Python source file into its unit hierarchy.
///
/// Syntax problems are recovered from and reported through
/// [`ParsedFile::errors`]. Only text that is not source code at all (it
/// contains NUL bytes) is rejected.
pub fn parse_source(path: &str, source: &str) -> Result<ParsedFile> {
    if source.contains('\0') {
        return Err(Error::input(format!("{path}: binary content, not Python source")));
    }
    let lexed = tokenize(source);
    let tree = syntax::parse_tokens(&lexed);

    let mut docstring_tokens = vec![false; lexed.tokens.len()];
    for id in tree.walk(&tree.module) {
        let s = tree.stmt(id);
        if s.kind == StmtKind::Docstring {
            for i in s.tokens.clone() {
                docstring_tokens[i] = true;
            }
        }
    }

    let mut lines = vec![LineInfo::default(); lexed.line_count];
    for (i, t) in lexed.tokens.iter().enumerate() {
        match t.kind {
            TokenKind::Comment => mark_lines(&mut lines, t.line, t.line, |l| l.comment = true),
            _ if docstring_tokens[i] => {
                mark_lines(&mut lines, t.line, t.end_line, |l| l.comment = true)
            }
            _ if t.is_significant() => {
                mark_lines(&mut lines, t.line, t.end_line, |l| l.code = true)
            }
            _ => {}
        }
    }
    for id in tree.walk(&tree.module) {
        let s = tree.stmt(id);
        if s.kind == StmtKind::Docstring {
            continue;
        }
        let decl = s.kind.is_declaration();
        for range in s.own_ranges() {
            for i in range.filter(|&i| lexed.tokens[i].is_significant()) {
                let t = &lexed.tokens[i];
                mark_lines(&mut lines, t.line, t.end_line, |l| {
                    if decl {
                        l.decl = true
                    } else {
                        l.exec = true
                    }
                });
            }
        }
    }

    let mut parsed = ParsedFile {
        path: path.to_string(),
        source: source.to_string(),
        lexed,
        tree,
        lines,
        docstring_tokens,
        root: SyntaxUnit {
            kind: UnitKind::File,
            name: path.to_string(),
            qualified_name: String::new(),
            span: (1, 0),
            body_text: String::new(),
            children: Vec::new(),
            stmt: None,
        },
    };
    let mut seen = HashMap::new();
    let children = build_units(&parsed, &parsed.tree.module.clone(), "", &mut seen);
    parsed.root.span = (1, parsed.lines.len());
    parsed.root.body_text = source.to_string();
    parsed.root.children = children;
    Ok(parsed)
}

fn build_units(
    parsed: &ParsedFile,
    body: &[StmtId],
    prefix: &str,
    seen: &mut HashMap<String, usize>,
) -> Vec<SyntaxUnit> {
    let mut out = Vec::new();
    // scopes nested inside control flow (`if TYPE_CHECKING: def ...`) still belong here
    let mut stack: Vec<StmtId> = body.iter().rev().copied().collect();
    while let Some(id) = stack.pop() {
        let s = parsed.tree.stmt(id);
        let kind = match s.kind {
            StmtKind::Def { .. } => UnitKind::Method,
            StmtKind::Class { .. } => UnitKind::Class,
            _ => {
                let children: Vec<StmtId> = s.children().collect();
                stack.extend(children.into_iter().rev());
                continue;
            }
        };
        let name = s.name().unwrap_or_default().to_string();
        let base = if prefix.is_empty() {
            name.clone()
        } else {
            format!("{prefix}.{name}")
        };
        let count = seen.entry(base.clone()).or_insert(0);
        *count += 1;
        let qualified_name = if *count == 1 {
            base
        } else {
            format!("{base}#{count}")
        };
        let span = (s.first_line, s.last_line);
        let children = build_units(parsed, parsed.tree.body(id), &qualified_name, seen);
        out.push(SyntaxUnit {
            kind,
            name,
            qualified_name,
            span,
            body_text: parsed.span_text(span),
            children,
            stmt: Some(id),
        });
    }
    out
}

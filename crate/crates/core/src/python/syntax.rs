//! Statement tree built on top of the token stream.
//!
//! This is not a full Python grammar. It recognises logical lines, block
//! structure and compound statement clauses, which is everything the metric
//! suite needs. Expressions stay as token ranges.

use std::ops::Range;

use super::lexer::{Lexed, Token, TokenKind};

pub type StmtId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Def { name: String, is_async: bool },
    Class { name: String },
    If,
    For { is_async: bool },
    While,
    Try,
    With,
    Match,
    /// A `case` block inside a `match` body. `wildcard` is set for `case _:`.
    Case { wildcard: bool },
    Return,
    Raise,
    Break,
    Continue,
    Pass,
    Import,
    Global,
    Nonlocal,
    /// A bare string literal leading a module, class or function body.
    Docstring,
    /// Everything else: expressions, assignments, `del`, `assert`, ...
    Simple,
}

impl StmtKind {
    pub fn is_compound(&self) -> bool {
        matches!(
            self,
            StmtKind::Def { .. }
                | StmtKind::Class { .. }
                | StmtKind::If
                | StmtKind::For { .. }
                | StmtKind::While
                | StmtKind::Try
                | StmtKind::With
                | StmtKind::Match
                | StmtKind::Case { .. }
        )
    }

    /// Control-flow compounds, i.e. compounds other than `def` and `class`.
    pub fn is_control(&self) -> bool {
        self.is_compound() && !self.is_scope()
    }

    pub fn is_scope(&self) -> bool {
        matches!(self, StmtKind::Def { .. } | StmtKind::Class { .. })
    }

    /// Declarations as opposed to executable statements.
    pub fn is_declaration(&self) -> bool {
        matches!(
            self,
            StmtKind::Def { .. }
                | StmtKind::Class { .. }
                | StmtKind::Import
                | StmtKind::Global
                | StmtKind::Nonlocal
        )
    }

    pub fn is_exit(&self) -> bool {
        matches!(self, StmtKind::Return | StmtKind::Raise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseKind {
    Head,
    Elif,
    Else,
    Except,
    Finally,
}

#[derive(Debug, Clone)]
pub struct Clause {
    pub kind: ClauseKind,
    /// Header tokens, keyword through the trailing colon.
    pub header: Range<usize>,
    pub line: usize,
    pub body: Vec<StmtId>,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    /// For simple statements, every token; for compounds, the first clause header.
    pub tokens: Range<usize>,
    pub decorators: Vec<Range<usize>>,
    /// First line, decorators included.
    pub first_line: usize,
    /// Last line, nested bodies included.
    pub last_line: usize,
    /// Number of enclosing blocks; module-level statements have depth 0.
    pub depth: usize,
    /// Empty for simple statements.
    pub clauses: Vec<Clause>,
}

impl Stmt {
    pub fn name(&self) -> Option<&str> {
        match &self.kind {
            StmtKind::Def { name, .. } | StmtKind::Class { name } => Some(name),
            _ => None,
        }
    }

    /// Token ranges that belong to this statement itself (not to nested bodies).
    pub fn own_ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let headers: Vec<Range<usize>> = if self.clauses.is_empty() {
            vec![self.tokens.clone()]
        } else {
            self.clauses.iter().map(|c| c.header.clone()).collect()
        };
        self.decorators.iter().cloned().chain(headers)
    }

    pub fn children(&self) -> impl Iterator<Item = StmtId> + '_ {
        self.clauses.iter().flat_map(|c| c.body.iter().copied())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SyntaxTree {
    pub stmts: Vec<Stmt>,
    pub module: Vec<StmtId>,
    pub errors: Vec<String>,
}

impl SyntaxTree {
    pub fn stmt(&self, id: StmtId) -> &Stmt {
        &self.stmts[id]
    }

    /// Pre-order walk over `roots` and all their descendants.
    pub fn walk(&self, roots: &[StmtId]) -> Vec<StmtId> {
        let mut out = Vec::new();
        let mut stack: Vec<StmtId> = roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            let children: Vec<StmtId> = self.stmts[id].children().collect();
            stack.extend(children.into_iter().rev());
        }
        out
    }

    /// Pre-order walk that does not descend into nested `def`/`class` bodies.
    /// The nested scope statements themselves are not yielded either.
    pub fn walk_own(&self, roots: &[StmtId]) -> Vec<StmtId> {
        let mut out = Vec::new();
        let mut stack: Vec<StmtId> = roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            if self.stmts[id].kind.is_scope() {
                continue;
            }
            out.push(id);
            let children: Vec<StmtId> = self.stmts[id].children().collect();
            stack.extend(children.into_iter().rev());
        }
        out
    }

    /// Body of a scope statement (the statements directly inside it).
    pub fn body(&self, id: StmtId) -> &[StmtId] {
        self.stmts[id]
            .clauses
            .first()
            .map_or(&[][..], |c| c.body.as_slice())
    }
}

struct RawStmt {
    id: StmtId,
    clause_kw: Option<ClauseKind>,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    tree: SyntaxTree,
}

/// Find the depth-0 colon ending a compound header, skipping lambda colons.
fn header_colon(toks: &[Token], range: Range<usize>) -> Option<usize> {
    let mut depth = 0i32;
    let mut lambdas = 0usize;
    for i in range {
        let t = &toks[i];
        if t.kind == TokenKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ":" if depth == 0 => {
                    if lambdas > 0 {
                        lambdas -= 1;
                    } else {
                        return Some(i);
                    }
                }
                _ => {}
            }
        } else if depth == 0 && t.is_name("lambda") {
            lambdas += 1;
        }
    }
    None
}

/// Split a token range at depth-0 semicolons.
fn split_semicolons(toks: &[Token], range: Range<usize>) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = range.start;
    let mut depth = 0i32;
    for i in range.clone() {
        let t = &toks[i];
        if t.kind == TokenKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ";" if depth == 0 => {
                    if i > start {
                        out.push(start..i);
                    }
                    start = i + 1;
                }
                _ => {}
            }
        }
    }
    if range.end > start {
        out.push(start..range.end);
    }
    out
}

impl<'a> Parser<'a> {
    fn peek_kind(&self) -> TokenKind {
        self.toks.get(self.pos).map_or(TokenKind::EndMarker, |t| t.kind)
    }

    fn skip_comments(&mut self) {
        while self.peek_kind() == TokenKind::Comment {
            self.pos += 1;
        }
    }

    /// Significant tokens of the next logical line, consuming its NEWLINE.
    /// Comment tokens inside the line are skipped over but stay in the range.
    fn logical_line(&mut self) -> Range<usize> {
        let start = self.pos;
        while !matches!(
            self.peek_kind(),
            TokenKind::Newline | TokenKind::EndMarker | TokenKind::Indent | TokenKind::Dedent
        ) {
            self.pos += 1;
        }
        let mut end = self.pos;
        while end > start && self.toks[end - 1].kind == TokenKind::Comment {
            end -= 1;
        }
        if self.peek_kind() == TokenKind::Newline {
            self.pos += 1;
        }
        start..end
    }

    fn first_significant(&self, range: &Range<usize>) -> Option<usize> {
        range
            .clone()
            .find(|&i| self.toks[i].kind != TokenKind::Comment)
    }

    fn alloc(&mut self, stmt: Stmt) -> StmtId {
        self.tree.stmts.push(stmt);
        self.tree.stmts.len() - 1
    }

    fn suite(&mut self, depth: usize) -> Vec<StmtId> {
        let mut raw: Vec<RawStmt> = Vec::new();
        let mut decorators: Vec<Range<usize>> = Vec::new();
        loop {
            self.skip_comments();
            match self.peek_kind() {
                TokenKind::EndMarker => break,
                TokenKind::Dedent => {
                    self.pos += 1;
                    if depth > 0 {
                        break;
                    }
                    self.tree.errors.push("unexpected dedent at module level".into());
                    continue;
                }
                TokenKind::Indent => {
                    let line = self.toks[self.pos].line;
                    self.tree.errors.push(format!("line {line}: unexpected indent"));
                    self.pos += 1;
                    let nested = self.suite(depth + 1);
                    raw.extend(nested.into_iter().map(|id| RawStmt { id, clause_kw: None }));
                    continue;
                }
                TokenKind::Newline => {
                    self.pos += 1;
                    continue;
                }
                _ => {}
            }
            let line = self.logical_line();
            let Some(first) = self.first_significant(&line) else {
                continue;
            };
            if self.toks[first].is_op("@") {
                decorators.push(line);
                continue;
            }
            let decos = std::mem::take(&mut decorators);
            raw.extend(self.statement(line, decos, depth));
        }
        if !decorators.is_empty() {
            self.tree.errors.push("decorator without definition".into());
        }
        self.group_clauses(raw)
    }

    /// Parse one logical line into one or more statements.
    fn statement(
        &mut self,
        line: Range<usize>,
        decorators: Vec<Range<usize>>,
        depth: usize,
    ) -> Vec<RawStmt> {
        let toks = self.toks;
        let first = self.first_significant(&line).unwrap();
        let mut kw_at = first;
        let is_async = toks[first].is_name("async");
        if is_async && first + 1 < line.end {
            kw_at = first + 1;
        }
        let kw = toks[kw_at].text.as_str();
        let is_name = toks[kw_at].kind == TokenKind::Name;
        let compound_kw = is_name
            && matches!(
                kw,
                "if" | "elif"
                    | "else"
                    | "for"
                    | "while"
                    | "try"
                    | "except"
                    | "finally"
                    | "with"
                    | "def"
                    | "class"
            );
        let soft_kw = is_name
            && matches!(kw, "match" | "case")
            && line.end > kw_at + 1
            && !toks[kw_at + 1].is_significant_op_blocking_soft_keyword()
            && self.line_ends_with_colon(&line);
        let colon = if compound_kw || soft_kw {
            header_colon(toks, kw_at..line.end)
        } else {
            None
        };
        let Some(colon) = colon else {
            if compound_kw {
                self.tree.errors.push(format!(
                    "line {}: compound statement without colon",
                    toks[first].line
                ));
            }
            return split_semicolons(toks, first..line.end)
                .into_iter()
                .map(|r| {
                    let id = self.simple(r, depth);
                    RawStmt { id, clause_kw: None }
                })
                .collect();
        };
        let (kind, clause_kw) = match kw {
            "if" => (StmtKind::If, ClauseKind::Head),
            "elif" => (StmtKind::If, ClauseKind::Elif),
            "else" => (StmtKind::Simple, ClauseKind::Else),
            "except" => (StmtKind::Simple, ClauseKind::Except),
            "finally" => (StmtKind::Simple, ClauseKind::Finally),
            "for" => (StmtKind::For { is_async }, ClauseKind::Head),
            "while" => (StmtKind::While, ClauseKind::Head),
            "try" => (StmtKind::Try, ClauseKind::Head),
            "with" => (StmtKind::With, ClauseKind::Head),
            "match" => (StmtKind::Match, ClauseKind::Head),
            "case" => {
                let wildcard = colon == kw_at + 2 && toks[kw_at + 1].is_name("_");
                (StmtKind::Case { wildcard }, ClauseKind::Head)
            }
            "def" => {
                let name = toks
                    .get(kw_at + 1)
                    .filter(|t| t.kind == TokenKind::Name)
                    .map_or_else(String::new, |t| t.text.clone());
                (StmtKind::Def { name, is_async }, ClauseKind::Head)
            }
            "class" => {
                let name = toks
                    .get(kw_at + 1)
                    .filter(|t| t.kind == TokenKind::Name)
                    .map_or_else(String::new, |t| t.text.clone());
                (StmtKind::Class { name }, ClauseKind::Head)
            }
            _ => unreachable!(),
        };
        let header = first..colon + 1;
        let header_line = toks[first].line;
        let first_line = decorators
            .first()
            .and_then(|r| self.first_significant(r))
            .map_or(header_line, |i| toks[i].line);
        let body = if colon + 1 < line.end {
            // inline body: `if x: return 1`
            split_semicolons(toks, colon + 1..line.end)
                .into_iter()
                .map(|r| self.simple(r, depth + 1))
                .collect()
        } else {
            self.skip_comments();
            if self.peek_kind() == TokenKind::Indent {
                self.pos += 1;
                self.suite(depth + 1)
            } else {
                self.tree
                    .errors
                    .push(format!("line {header_line}: expected an indented block"));
                Vec::new()
            }
        };
        let body = if kind.is_scope() {
            self.mark_docstring(body)
        } else {
            body
        };
        let last_line = body
            .iter()
            .map(|&b| self.tree.stmts[b].last_line)
            .max()
            .unwrap_or(toks[colon].end_line)
            .max(toks[colon].end_line);
        let id = self.alloc(Stmt {
            kind,
            tokens: header.clone(),
            decorators,
            first_line,
            last_line,
            depth,
            clauses: vec![Clause {
                kind: clause_kw,
                header,
                line: header_line,
                body,
            }],
        });
        let clause_kw = (clause_kw != ClauseKind::Head).then_some(clause_kw);
        vec![RawStmt { id, clause_kw }]
    }

    fn line_ends_with_colon(&self, line: &Range<usize>) -> bool {
        header_colon(self.toks, line.clone()).is_some()
    }

    fn simple(&mut self, range: Range<usize>, depth: usize) -> StmtId {
        let toks = self.toks;
        let first = &toks[range.start];
        let kind = if first.kind == TokenKind::Name {
            match first.text.as_str() {
                "return" => StmtKind::Return,
                "raise" => StmtKind::Raise,
                "break" => StmtKind::Break,
                "continue" => StmtKind::Continue,
                "pass" => StmtKind::Pass,
                "import" | "from" => StmtKind::Import,
                "global" => StmtKind::Global,
                "nonlocal" => StmtKind::Nonlocal,
                _ => StmtKind::Simple,
            }
        } else {
            StmtKind::Simple
        };
        let last = range
            .clone()
            .rev()
            .find(|&i| toks[i].kind != TokenKind::Comment)
            .unwrap_or(range.start);
        self.alloc(Stmt {
            kind,
            tokens: range.clone(),
            decorators: Vec::new(),
            first_line: first.line,
            last_line: toks[last].end_line,
            depth,
            clauses: Vec::new(),
        })
    }

    fn mark_docstring(&mut self, body: Vec<StmtId>) -> Vec<StmtId> {
        if let Some(&first) = body.first() {
            let stmt = &self.tree.stmts[first];
            if stmt.kind == StmtKind::Simple
                && stmt
                    .tokens
                    .clone()
                    .filter(|&i| self.toks[i].kind != TokenKind::Comment)
                    .all(|i| self.toks[i].kind == TokenKind::String)
            {
                self.tree.stmts[first].kind = StmtKind::Docstring;
            }
        }
        body
    }

    /// Attach `elif`/`else`/`except`/`finally` clauses to their compound and
    /// fold `case` blocks into their `match`.
    fn group_clauses(&mut self, raw: Vec<RawStmt>) -> Vec<StmtId> {
        let mut out: Vec<StmtId> = Vec::new();
        for r in raw {
            let Some(kw) = r.clause_kw else {
                out.push(r.id);
                continue;
            };
            let owner = out.last().copied().filter(|&prev| {
                let p = &self.tree.stmts[prev];
                let last = p.clauses.last().map(|c| c.kind);
                match (&p.kind, kw) {
                    (StmtKind::If, ClauseKind::Elif) => {
                        matches!(last, Some(ClauseKind::Head) | Some(ClauseKind::Elif))
                    }
                    (StmtKind::If, ClauseKind::Else) => {
                        matches!(last, Some(ClauseKind::Head) | Some(ClauseKind::Elif))
                    }
                    (StmtKind::For { .. } | StmtKind::While, ClauseKind::Else) => {
                        last == Some(ClauseKind::Head)
                    }
                    (StmtKind::Try, ClauseKind::Except) => {
                        matches!(last, Some(ClauseKind::Head) | Some(ClauseKind::Except))
                    }
                    (StmtKind::Try, ClauseKind::Else) => last == Some(ClauseKind::Except),
                    (StmtKind::Try, ClauseKind::Finally) => matches!(
                        last,
                        Some(ClauseKind::Head) | Some(ClauseKind::Except) | Some(ClauseKind::Else)
                    ),
                    _ => false,
                }
            });
            let mut clause_stmt = self.tree.stmts[r.id].clone();
            let clause = clause_stmt.clauses.pop().unwrap();
            match owner {
                Some(owner) => {
                    let o = &mut self.tree.stmts[owner];
                    o.last_line = o.last_line.max(clause_stmt.last_line);
                    o.clauses.push(clause);
                    // the clause's placeholder statement stays in the arena but is unreachable
                }
                None => {
                    self.tree.errors.push(format!(
                        "line {}: {:?} clause without matching statement",
                        clause.line, kw
                    ));
                    let s = &mut self.tree.stmts[r.id];
                    s.clauses = vec![Clause {
                        kind: ClauseKind::Head,
                        ..clause
                    }];
                    s.kind = StmtKind::If;
                    out.push(r.id);
                }
            }
        }
        for &id in &out {
            if self.tree.stmts[id].kind == StmtKind::Match {
                self.fold_cases(id);
            }
        }
        out
    }

    fn fold_cases(&mut self, id: StmtId) {
        let body = std::mem::take(&mut self.tree.stmts[id].clauses[0].body);
        let mut kept = Vec::new();
        let mut cases = Vec::new();
        for child in body {
            let s = &self.tree.stmts[child];
            if matches!(s.kind, StmtKind::Case { .. }) {
                cases.push(child);
            } else {
                kept.push(child);
            }
        }
        self.tree.stmts[id].clauses[0].body = kept;
        // cases stay as statements so that their wildcard flag survives
        self.tree.stmts[id].clauses[0].body.extend(cases);
    }
}

trait SoftKeywordCheck {
    fn is_significant_op_blocking_soft_keyword(&self) -> bool;
}

impl SoftKeywordCheck for Token {
    /// `match = 1`, `match.x`, `match(...)` style uses are plain identifiers.
    fn is_significant_op_blocking_soft_keyword(&self) -> bool {
        self.kind == TokenKind::Op
            && matches!(
                self.text.as_str(),
                "=" | "." | ":" | "," | ")" | "]" | "}" | "+=" | "-=" | "*=" | "/=" | ";"
            )
    }
}

/// Build the statement tree for a token stream.
pub fn parse_tokens(lexed: &Lexed) -> SyntaxTree {
    let mut parser = Parser {
        toks: &lexed.tokens,
        pos: 0,
        tree: SyntaxTree::default(),
    };
    let module = parser.suite(0);
    let module = parser.mark_docstring(module);
    parser.tree.module = module;
    parser.tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::python::lexer::tokenize;

    fn parse(src: &str) -> (Lexed, SyntaxTree) {
        let lexed = tokenize(src);
        let tree = parse_tokens(&lexed);
        (lexed, tree)
    }

    #[test]
    fn if_elif_else_grouped() {
        let (_, tree) = parse("if a:\n    x = 1\nelif b:\n    x = 2\nelse:\n    x = 3\ny = 4\n");
        assert_eq!(tree.module.len(), 2);
        let s = tree.stmt(tree.module[0]);
        assert_eq!(s.kind, StmtKind::If);
        assert_eq!(s.clauses.len(), 3);
        assert_eq!(s.first_line, 1);
        assert_eq!(s.last_line, 6);
        assert!(tree.errors.is_empty());
    }

    #[test]
    fn try_clauses() {
        let src = "try:\n    f()\nexcept A:\n    pass\nexcept B:\n    pass\nelse:\n    g()\nfinally:\n    h()\n";
        let (_, tree) = parse(src);
        let s = tree.stmt(tree.module[0]);
        assert_eq!(s.kind, StmtKind::Try);
        let kinds: Vec<ClauseKind> = s.clauses.iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            [
                ClauseKind::Head,
                ClauseKind::Except,
                ClauseKind::Except,
                ClauseKind::Else,
                ClauseKind::Finally
            ]
        );
    }

    #[test]
    fn defs_decorators_docstrings() {
        let src = "@dec\n@other(1)\ndef f(x):\n    \"\"\"Doc.\"\"\"\n    return x\n";
        let (_, tree) = parse(src);
        let s = tree.stmt(tree.module[0]);
        assert_eq!(
            s.kind,
            StmtKind::Def {
                name: "f".into(),
                is_async: false
            }
        );
        assert_eq!(s.decorators.len(), 2);
        assert_eq!(s.first_line, 1);
        assert_eq!(s.last_line, 5);
        let body = tree.body(tree.module[0]);
        assert_eq!(tree.stmt(body[0]).kind, StmtKind::Docstring);
        assert_eq!(tree.stmt(body[1]).kind, StmtKind::Return);
    }

    #[test]
    fn inline_bodies_and_semicolons() {
        let (_, tree) = parse("def f(): x = 1; return x\nif a: pass\n");
        let body = tree.body(tree.module[0]);
        assert_eq!(body.len(), 2);
        assert_eq!(tree.stmt(body[1]).kind, StmtKind::Return);
        assert_eq!(tree.stmt(body[1]).depth, 1);
    }

    #[test]
    fn lambda_colon_in_header() {
        let (_, tree) = parse("if (lambda: 1)() and {1: 2}:\n    pass\n");
        assert_eq!(tree.stmt(tree.module[0]).kind, StmtKind::If);
        let (_, tree) = parse("with f(key=lambda x: x) as g:\n    pass\n");
        assert_eq!(tree.stmt(tree.module[0]).kind, StmtKind::With);
    }

    #[test]
    fn match_and_soft_keywords() {
        let src = "match cmd:\n    case 1:\n        a()\n    case _:\n        b()\nmatch = 3\n";
        let (_, tree) = parse(src);
        assert_eq!(tree.module.len(), 2);
        let m = tree.stmt(tree.module[0]);
        assert_eq!(m.kind, StmtKind::Match);
        let cases: Vec<&StmtKind> = m.clauses[0]
            .body
            .iter()
            .map(|&c| &tree.stmt(c).kind)
            .collect();
        assert_eq!(
            cases,
            [
                &StmtKind::Case { wildcard: false },
                &StmtKind::Case { wildcard: true }
            ]
        );
        assert_eq!(tree.stmt(tree.module[1]).kind, StmtKind::Simple);
    }

    #[test]
    fn nesting_depths() {
        let src = "class A:\n    def m(self):\n        for i in x:\n            if i:\n                pass\n";
        let (_, tree) = parse(src);
        let all = tree.walk(&tree.module);
        let depths: Vec<usize> = all.iter().map(|&i| tree.stmt(i).depth).collect();
        assert_eq!(depths, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn walk_own_skips_nested_scopes() {
        let src = "def f():\n    def g():\n        return 1\n    return g\n";
        let (_, tree) = parse(src);
        let own = tree.walk_own(tree.body(tree.module[0]));
        assert_eq!(own.len(), 1);
        assert_eq!(tree.stmt(own[0]).kind, StmtKind::Return);
    }

    #[test]
    fn orphan_clause_is_recovered() {
        let (_, tree) = parse("else:\n    x = 1\ny = 2\n");
        assert_eq!(tree.module.len(), 2);
        assert!(!tree.errors.is_empty());
    }
}

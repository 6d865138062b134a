//! Control-flow metrics: cyclomatic complexity, nesting depth, path count.

use crate::python::{ClauseKind, ParsedFile, StmtId, StmtKind, TokenKind};

/// Upper bound on the path count of one method.
pub const NP_CAP: f64 = 1e6;

/// 1 + decision points among `tokens` (own tokens of a scope) and the
/// statements reachable without entering nested scopes.
///
/// Decision points: every `if` (statements, ternaries, comprehension
/// filters), `elif`, `while`, statement-level `for`, `except`, `and`, `or`,
/// and each `case` other than the wildcard.
pub fn cyclomatic(file: &ParsedFile, tokens: &[usize], stmts: &[StmtId]) -> usize {
    let keyword_points = tokens
        .iter()
        .map(|&i| file.token(i))
        .filter(|t| {
            t.kind == TokenKind::Name
                && matches!(t.text.as_str(), "if" | "elif" | "while" | "except" | "and" | "or")
        })
        .count();
    let structural = stmts
        .iter()
        .filter(|&&id| {
            matches!(
                file.tree.stmt(id).kind,
                StmtKind::For { .. } | StmtKind::Case { wildcard: false }
            )
        })
        .count();
    1 + keyword_points + structural
}

/// Deepest nesting of control compounds under `roots`. `def` and `class`
/// add no depth; with `descend_scopes` false they are not entered at all.
pub fn max_nesting(file: &ParsedFile, roots: &[StmtId], descend_scopes: bool) -> usize {
    let mut best = 0;
    let mut stack: Vec<(StmtId, usize)> = roots.iter().map(|&id| (id, 0)).collect();
    while let Some((id, depth)) = stack.pop() {
        let s = file.tree.stmt(id);
        if s.kind.is_scope() && !descend_scopes {
            continue;
        }
        // `case` blocks sit inside their `match`, which already counted the level
        let inner = if s.kind.is_control() && !matches!(s.kind, StmtKind::Case { .. }) {
            depth + 1
        } else {
            depth
        };
        best = best.max(inner);
        stack.extend(s.children().map(|c| (c, inner)));
    }
    best
}

#[derive(Debug, Clone, Copy, Default)]
struct Flow {
    normal: f64,
    ret: f64,
    brk: f64,
    cont: f64,
}

impl Flow {
    fn identity() -> Self {
        Flow {
            normal: 1.0,
            ..Flow::default()
        }
    }

    fn add(self, o: Flow) -> Flow {
        Flow {
            normal: self.normal + o.normal,
            ret: self.ret + o.ret,
            brk: self.brk + o.brk,
            cont: self.cont + o.cont,
        }
    }

    fn scale(self, k: f64) -> Flow {
        Flow {
            normal: self.normal * k,
            ret: self.ret * k,
            brk: self.brk * k,
            cont: self.cont * k,
        }
    }

    /// Run `next` after every normally completing path of `self`.
    fn then(self, next: Flow) -> Flow {
        Flow {
            normal: self.normal * next.normal,
            ret: self.ret + self.normal * next.ret,
            brk: self.brk + self.normal * next.brk,
            cont: self.cont + self.normal * next.cont,
        }
    }

    fn total(&self) -> f64 {
        self.normal + self.ret + self.brk + self.cont
    }
}

/// Expression-level branches (ternaries, comprehension filters) inside a
/// header or simple statement double the paths through it.
fn expression_factor(file: &ParsedFile, id: StmtId) -> f64 {
    let s = file.tree.stmt(id);
    let mut ifs = 0i32;
    for range in s.own_ranges() {
        ifs += range
            .filter(|&i| file.token(i).is_name("if"))
            .count() as i32;
    }
    if s.kind == StmtKind::If {
        // the statement's own `if` keyword is not an expression branch
        ifs -= 1;
    }
    2f64.powi(ifs.max(0))
}

fn sequence(file: &ParsedFile, body: &[StmtId]) -> Flow {
    body.iter()
        .fold(Flow::identity(), |acc, &id| acc.then(statement(file, id)))
}

fn statement(file: &ParsedFile, id: StmtId) -> Flow {
    let s = file.tree.stmt(id);
    let factor = expression_factor(file, id);
    let flow = match &s.kind {
        StmtKind::Return | StmtKind::Raise => Flow {
            ret: 1.0,
            ..Flow::default()
        },
        StmtKind::Break => Flow {
            brk: 1.0,
            ..Flow::default()
        },
        StmtKind::Continue => Flow {
            cont: 1.0,
            ..Flow::default()
        },
        StmtKind::If => {
            let mut flow = Flow::default();
            for c in &s.clauses {
                flow = flow.add(sequence(file, &c.body));
            }
            if !s.clauses.iter().any(|c| c.kind == ClauseKind::Else) {
                flow = flow.add(Flow::identity());
            }
            flow
        }
        StmtKind::For { .. } | StmtKind::While => {
            let body = sequence(file, &s.clauses[0].body);
            // zero iterations, or one pass that completes or continues
            let natural = 1.0 + body.normal + body.cont;
            let exit = Flow {
                normal: natural,
                ret: body.ret,
                ..Flow::default()
            };
            let with_else = match s.clauses.iter().find(|c| c.kind == ClauseKind::Else) {
                Some(c) => exit.then(sequence(file, &c.body)),
                None => exit,
            };
            Flow {
                normal: with_else.normal + body.brk,
                ..with_else
            }
        }
        StmtKind::Try => {
            let body = sequence(file, &s.clauses[0].body);
            let else_flow = s
                .clauses
                .iter()
                .find(|c| c.kind == ClauseKind::Else)
                .map_or(Flow::identity(), |c| sequence(file, &c.body));
            let mut flow = body.then(else_flow);
            for c in s.clauses.iter().filter(|c| c.kind == ClauseKind::Except) {
                flow = flow.add(sequence(file, &c.body));
            }
            if let Some(fin) = s.clauses.iter().find(|c| c.kind == ClauseKind::Finally) {
                let fin = sequence(file, &fin.body);
                let total = flow.total();
                flow = Flow {
                    normal: flow.normal * fin.normal,
                    ret: flow.ret * fin.normal + total * fin.ret,
                    brk: flow.brk * fin.normal + total * fin.brk,
                    cont: flow.cont * fin.normal + total * fin.cont,
                };
            }
            flow
        }
        StmtKind::With => sequence(file, &s.clauses[0].body),
        StmtKind::Match => {
            let mut flow = Flow::default();
            let mut wildcard = false;
            for &child in &s.clauses[0].body {
                let c = file.tree.stmt(child);
                if let StmtKind::Case { wildcard: w } = c.kind {
                    wildcard |= w;
                    flow = flow.add(sequence(file, &c.clauses[0].body).scale(expression_factor(file, child)));
                } else {
                    flow = flow.then(statement(file, child));
                }
            }
            if !wildcard {
                flow = flow.add(Flow::identity());
            }
            flow
        }
        StmtKind::Case { .. } => sequence(file, &s.clauses[0].body),
        _ => Flow::identity(),
    };
    flow.scale(factor)
}

/// Number of acyclic paths through a function body, capped at [`NP_CAP`].
/// Loops contribute a path that skips them and a path through one iteration.
pub fn path_count(file: &ParsedFile, body: &[StmtId]) -> f64 {
    sequence(file, body).total().clamp(1.0, NP_CAP)
}

//! A Python 3 tokenizer.
//!
//! Emits the same token stream shape as CPython's `tokenize` module
//! (NAME/NUMBER/STRING/OP/COMMENT/NEWLINE/INDENT/DEDENT), minus the
//! non-logical NL tokens. Malformed input never aborts: problems are recorded
//! in [`Lexed::errors`] and lexing resumes at the next sensible position.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Name,
    Number,
    String,
    Op,
    Comment,
    Newline,
    Indent,
    Dedent,
    /// A character that cannot start any token.
    Error,
    EndMarker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based line of the first character.
    pub line: usize,
    /// 0-based column (in chars) of the first character.
    pub col: usize,
    /// 1-based line of the last character.
    pub end_line: usize,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
}

impl Token {
    /// A token that carries program text (not layout or comments).
    pub fn is_significant(&self) -> bool {
        matches!(
            self.kind,
            TokenKind::Name | TokenKind::Number | TokenKind::String | TokenKind::Op | TokenKind::Error
        )
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text == op
    }

    pub fn is_name(&self, name: &str) -> bool {
        self.kind == TokenKind::Name && self.text == name
    }

    pub fn is_keyword(&self) -> bool {
        self.kind == TokenKind::Name && is_keyword(&self.text)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({:?})@{}:{}", self.kind, self.text, self.line, self.col)
    }
}

pub const KEYWORDS: [&str; 35] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Keywords that denote values rather than operations.
pub fn is_literal_keyword(word: &str) -> bool {
    matches!(word, "True" | "False" | "None")
}

#[derive(Debug, Clone, Default)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    pub errors: Vec<String>,
    /// Number of physical lines in the source.
    pub line_count: usize,
}

impl Lexed {
    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }
}

const OPS3: [&str; 5] = ["**=", "//=", ">>=", "<<=", "..."];
const OPS2: [&str; 19] = [
    "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", ":=", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "@=",
];
const OPS1: &str = "+-*/%@&|^~<>()[]{},:.;=!";

/// Number of physical lines: a trailing newline does not open a new line.
pub fn physical_line_count(source: &str) -> usize {
    if source.is_empty() {
        0
    } else {
        source.lines().count()
    }
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    col: usize,
    depth: usize,
    indents: Vec<usize>,
    at_line_start: bool,
    line_has_token: bool,
    out: Lexed,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
            line: 1,
            col: 0,
            depth: 0,
            indents: vec![0],
            at_line_start: true,
            line_has_token: false,
            out: Lexed {
                line_count: physical_line_count(src),
                ..Lexed::default()
            },
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).map(|&(_, c)| c)
    }

    fn byte_at(&self, pos: usize) -> usize {
        self.chars.get(pos).map_or(self.src.len(), |&(b, _)| b)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 0;
        } else if c == '\r' {
            if self.peek(0) != Some('\n') {
                self.line += 1;
                self.col = 0;
            }
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn emit(&mut self, kind: TokenKind, start_pos: usize, line: usize, col: usize) {
        let start = self.byte_at(start_pos);
        let end = self.byte_at(self.pos);
        let end_line = if kind == TokenKind::Newline {
            line
        } else {
            // a token ending in a newline (never happens except strings) still ends on its last char
            let last = self.src[start..end].trim_end_matches(['\n', '\r']);
            line + last.matches('\n').count()
                + last.matches('\r').count()
                - last.matches("\r\n").count()
        };
        self.out.tokens.push(Token {
            kind,
            text: self.src[start..end].to_string(),
            line,
            col,
            end_line,
            start,
            end,
        });
        if !matches!(kind, TokenKind::Comment | TokenKind::Newline) {
            self.line_has_token = true;
        }
    }

    fn emit_synthetic(&mut self, kind: TokenKind) {
        let at = self.byte_at(self.pos);
        self.out.tokens.push(Token {
            kind,
            text: String::new(),
            line: self.line,
            col: self.col,
            end_line: self.line,
            start: at,
            end: at,
        });
    }

    fn error(&mut self, msg: String) {
        self.out.errors.push(format!("line {}: {msg}", self.line));
    }

    fn at_newline(&self) -> bool {
        matches!(self.peek(0), Some('\n') | Some('\r'))
    }

    fn consume_newline(&mut self) {
        if self.peek(0) == Some('\r') {
            self.bump();
            if self.peek(0) == Some('\n') {
                self.bump();
            }
        } else {
            self.bump();
        }
    }

    fn handle_indentation(&mut self) {
        let mut width = 0usize;
        loop {
            match self.peek(0) {
                Some(' ') => width += 1,
                Some('\t') => width = (width / 8 + 1) * 8,
                Some('\x0c') => width = 0,
                _ => break,
            }
            self.bump();
        }
        // blank and comment-only lines do not affect indentation
        match self.peek(0) {
            None | Some('\n') | Some('\r') | Some('#') => return,
            Some('\\') if matches!(self.peek(1), Some('\n') | Some('\r')) => return,
            _ => {}
        }
        self.at_line_start = false;
        let current = *self.indents.last().unwrap();
        if width > current {
            self.indents.push(width);
            self.emit_synthetic(TokenKind::Indent);
        } else if width < current {
            while *self.indents.last().unwrap() > width {
                self.indents.pop();
                self.emit_synthetic(TokenKind::Dedent);
            }
            if *self.indents.last().unwrap() != width {
                self.error("unindent does not match any outer indentation level".into());
                self.indents.push(width);
                self.emit_synthetic(TokenKind::Indent);
            }
        }
    }

    fn run(mut self) -> Lexed {
        loop {
            if self.at_line_start && self.depth == 0 {
                self.handle_indentation();
            }
            let Some(c) = self.peek(0) else { break };
            let (start, line, col) = (self.pos, self.line, self.col);
            match c {
                ' ' | '\t' | '\x0c' => {
                    self.bump();
                }
                '\n' | '\r' => {
                    if self.depth == 0 && self.line_has_token {
                        self.consume_newline();
                        self.emit(TokenKind::Newline, start, line, col);
                        self.line_has_token = false;
                    } else {
                        self.consume_newline();
                    }
                    if self.depth == 0 {
                        self.at_line_start = true;
                    }
                }
                '#' => {
                    while !self.at_newline() && self.peek(0).is_some() {
                        self.bump();
                    }
                    self.emit(TokenKind::Comment, start, line, col);
                }
                '\\' => {
                    self.bump();
                    if self.at_newline() {
                        self.consume_newline();
                    } else {
                        self.error("unexpected character after line continuation".into());
                        self.emit(TokenKind::Error, start, line, col);
                    }
                }
                c if c.is_ascii_digit()
                    || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) =>
                {
                    self.number();
                    self.emit(TokenKind::Number, start, line, col);
                }
                c if is_id_start(c) => {
                    if let Some(quote_at) = self.string_prefix_len() {
                        for _ in 0..quote_at {
                            self.bump();
                        }
                        self.string();
                        self.emit(TokenKind::String, start, line, col);
                    } else {
                        while self.peek(0).is_some_and(is_id_continue) {
                            self.bump();
                        }
                        self.emit(TokenKind::Name, start, line, col);
                    }
                }
                '"' | '\'' => {
                    self.string();
                    self.emit(TokenKind::String, start, line, col);
                }
                _ => self.operator(start, line, col),
            }
        }
        if self.line_has_token {
            self.emit_synthetic(TokenKind::Newline);
        }
        if self.depth > 0 {
            self.error("unclosed bracket at end of file".into());
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.emit_synthetic(TokenKind::Dedent);
        }
        self.emit_synthetic(TokenKind::EndMarker);
        self.out
    }

    /// Length of a string prefix (`r`, `b`, `f`, `rb`, ...) when one precedes a quote.
    fn string_prefix_len(&self) -> Option<usize> {
        for len in 1..=2 {
            let prefix: String = (0..len).filter_map(|i| self.peek(i)).collect();
            if prefix.chars().count() != len {
                return None;
            }
            if !prefix.chars().all(|c| "rRbBuUfF".contains(c)) {
                return None;
            }
            if matches!(self.peek(len), Some('"') | Some('\'')) {
                let lower = prefix.to_lowercase();
                let valid = matches!(
                    lower.as_str(),
                    "r" | "b" | "u" | "f" | "rb" | "br" | "fr" | "rf"
                );
                return valid.then_some(len);
            }
        }
        None
    }

    fn string(&mut self) {
        let quote = self.peek(0).unwrap();
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        let start_line = self.line;
        if triple {
            self.bump();
            self.bump();
            self.bump();
            loop {
                match self.peek(0) {
                    None => {
                        self.out.errors.push(format!(
                            "line {start_line}: unterminated triple-quoted string"
                        ));
                        return;
                    }
                    Some('\\') => {
                        self.bump();
                        self.bump();
                    }
                    Some(c) if c == quote
                        && self.peek(1) == Some(quote)
                        && self.peek(2) == Some(quote) =>
                    {
                        self.bump();
                        self.bump();
                        self.bump();
                        return;
                    }
                    Some(_) => {
                        self.bump();
                    }
                }
            }
        } else {
            self.bump();
            loop {
                match self.peek(0) {
                    None | Some('\n') | Some('\r') => {
                        self.out
                            .errors
                            .push(format!("line {start_line}: unterminated string literal"));
                        return;
                    }
                    Some('\\') => {
                        self.bump();
                        if self.peek(0).is_some() {
                            self.bump();
                        }
                    }
                    Some(c) if c == quote => {
                        self.bump();
                        return;
                    }
                    Some(_) => {
                        self.bump();
                    }
                }
            }
        }
    }

    fn digits(&mut self, valid: impl Fn(char) -> bool) {
        while self.peek(0).is_some_and(|c| valid(c) || c == '_') {
            self.bump();
        }
    }

    fn number(&mut self) {
        if self.peek(0) == Some('0') {
            let radix = match self.peek(1) {
                Some('x') | Some('X') => Some(16),
                Some('o') | Some('O') => Some(8),
                Some('b') | Some('B') => Some(2),
                _ => None,
            };
            if let Some(radix) = radix {
                self.bump();
                self.bump();
                self.digits(|c| c.is_digit(radix));
                return;
            }
        }
        self.digits(|c| c.is_ascii_digit());
        if self.peek(0) == Some('.') {
            self.bump();
            self.digits(|c| c.is_ascii_digit());
        }
        if matches!(self.peek(0), Some('e') | Some('E')) {
            let sign = matches!(self.peek(1), Some('+') | Some('-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                for _ in 0..digit_at {
                    self.bump();
                }
                self.digits(|c| c.is_ascii_digit());
            }
        }
        if matches!(self.peek(0), Some('j') | Some('J')) {
            self.bump();
        }
    }

    fn operator(&mut self, start: usize, line: usize, col: usize) {
        let rest: String = (0..3).filter_map(|i| self.peek(i)).collect();
        let len = if OPS3.iter().any(|op| rest.starts_with(op)) {
            3
        } else if OPS2.iter().any(|op| rest.starts_with(op)) {
            2
        } else if rest.chars().next().is_some_and(|c| OPS1.contains(c)) {
            1
        } else {
            0
        };
        if len == 0 {
            let c = self.bump().unwrap();
            self.error(format!("invalid character {c:?}"));
            self.emit(TokenKind::Error, start, line, col);
            return;
        }
        for _ in 0..len {
            self.bump();
        }
        match &rest[..1] {
            "(" | "[" | "{" => self.depth += 1,
            ")" | "]" | "}" if len == 1 => {
                if self.depth == 0 {
                    self.error("unmatched closing bracket".into());
                } else {
                    self.depth -= 1;
                }
            }
            _ => {}
        }
        self.emit(TokenKind::Op, start, line, col);
    }
}

fn is_id_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_id_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

/// Tokenize Python source.
pub fn tokenize(source: &str) -> Lexed {
    Lexer::new(source).run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_texts(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .tokens
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn simple_assignment() {
        use TokenKind::*;
        let toks = kinds_texts("x = 1\n");
        assert_eq!(
            toks,
            vec![
                (Name, "x".into()),
                (Op, "=".into()),
                (Number, "1".into()),
                (Newline, "\n".into()),
                (EndMarker, "".into()),
            ]
        );
    }

    #[test]
    fn indentation_and_blocks() {
        use TokenKind::*;
        let src = "def f(x):\n    if x:\n        return 1\n\n    return 2\n";
        let kinds: Vec<TokenKind> = tokenize(src).tokens.iter().map(|t| t.kind).collect();
        let indents = kinds.iter().filter(|k| **k == Indent).count();
        let dedents = kinds.iter().filter(|k| **k == Dedent).count();
        assert_eq!(indents, 2);
        assert_eq!(dedents, 2);
        assert_eq!(kinds.iter().filter(|k| **k == Newline).count(), 4);
    }

    #[test]
    fn strings_and_prefixes() {
        let lexed = tokenize("a = rb'x\\'y' + f\"{z}\" + '''multi\nline'''\n");
        assert!(!lexed.has_errors(), "{:?}", lexed.errors);
        let strings: Vec<_> = lexed
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::String)
            .collect();
        assert_eq!(strings.len(), 3);
        assert_eq!(strings[2].line, 1);
        assert_eq!(strings[2].end_line, 2);
    }

    #[test]
    fn numbers() {
        let lexed = tokenize("n = [0x1F, 1_000, 3.14, .5, 1e-3, 2j, 0b101, 7.]\n");
        let nums: Vec<_> = lexed
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Number)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(nums, ["0x1F", "1_000", "3.14", ".5", "1e-3", "2j", "0b101", "7."]);
    }

    #[test]
    fn brackets_join_lines() {
        let lexed = tokenize("x = (1,\n     2)\ny = 3\n");
        let newlines = lexed
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Newline)
            .count();
        assert_eq!(newlines, 2);
    }

    #[test]
    fn comments_and_continuations() {
        let lexed = tokenize("x = 1 + \\\n    2  # trailing\n# alone\n");
        let comments: Vec<_> = lexed
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Comment)
            .map(|t| (t.line, t.text.clone()))
            .collect();
        assert_eq!(comments, vec![(2, "# trailing".into()), (3, "# alone".into())]);
        assert!(!lexed.has_errors());
    }

    #[test]
    fn errors_are_recoverable() {
        let lexed = tokenize("x = 'oops\ny = $\n");
        assert_eq!(lexed.errors.len(), 2);
        assert!(lexed.tokens.iter().any(|t| t.is_name("y")));
    }

    #[test]
    fn byte_offsets_roundtrip() {
        let src = "é = 'ü'  # ñ\n";
        for t in tokenize(src).tokens {
            assert_eq!(&src[t.start..t.end], t.text);
        }
    }
}

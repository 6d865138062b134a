//! Halstead counts over Python tokens.
//!
//! Operators are keywords (other than `True`/`False`/`None`), operator and
//! delimiter tokens, and call parentheses, which count as the single operator
//! `()`. Closing brackets are not counted separately. Operands are
//! identifiers and literals.

use std::collections::HashSet;

use crate::python::{is_callable_prefix, Token, TokenKind};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Halstead {
    /// Distinct operators (n1).
    pub hdop: usize,
    /// Distinct operands (n2).
    pub hdnd: usize,
    /// Total operators (N1).
    pub htop: usize,
    /// Total operands (N2).
    pub htoa: usize,
}

impl Halstead {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> Self {
        let mut operators: HashSet<String> = HashSet::new();
        let mut operands: HashSet<String> = HashSet::new();
        let mut h = Halstead::default();
        let mut prev: Option<&Token> = None;
        for t in tokens {
            let operator = match t.kind {
                TokenKind::Name if t.is_keyword() && !crate::python::lexer::is_literal_keyword(&t.text) => {
                    Some(t.text.clone())
                }
                TokenKind::Name | TokenKind::Number | TokenKind::String => {
                    h.htoa += 1;
                    operands.insert(t.text.clone());
                    None
                }
                TokenKind::Op => match t.text.as_str() {
                    ")" | "]" | "}" => None,
                    "(" if prev.is_some_and(is_callable_prefix) => Some("()".to_string()),
                    _ => Some(t.text.clone()),
                },
                _ => None,
            };
            if let Some(op) = operator {
                h.htop += 1;
                operators.insert(op);
            }
            if t.is_significant() {
                prev = Some(t);
            }
        }
        h.hdop = operators.len();
        h.hdnd = operands.len();
        h
    }

    /// Tokenize a snippet and count it.
    pub fn from_source(source: &str) -> Self {
        let lexed = crate::python::tokenize(source);
        Self::from_tokens(lexed.tokens.iter().filter(|t| t.kind != TokenKind::Comment))
    }

    pub fn vocabulary(&self) -> f64 {
        (self.hdop + self.hdnd) as f64
    }

    pub fn length(&self) -> f64 {
        (self.htop + self.htoa) as f64
    }

    pub fn volume(&self) -> f64 {
        let v = self.vocabulary();
        if v > 0.0 {
            self.length() * v.log2()
        } else {
            0.0
        }
    }

    pub fn difficulty(&self) -> f64 {
        if self.hdnd == 0 {
            0.0
        } else {
            (self.hdop as f64 / 2.0) * (self.htoa as f64 / self.hdnd as f64)
        }
    }

    pub fn effort(&self) -> f64 {
        self.difficulty() * self.volume()
    }
}

/// Maintainability index, clamped to [0, 171].
pub fn maintainability_index(volume: f64, cc: f64, loc: f64) -> f64 {
    let mi = 171.0 - 5.2 * volume.max(1.0).ln() - 0.23 * cc - 16.2 * loc.max(1.0).ln();
    mi.clamp(0.0, 171.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_snippet() {
        // operators: = + + (2 distinct, 3 total); operands: x a b a (3 distinct, 4 total)
        let h = Halstead::from_source("x = a + b + a\n");
        assert_eq!((h.hdop, h.hdnd, h.htop, h.htoa), (2, 3, 3, 4));
        assert_eq!(h.vocabulary(), 5.0);
        assert_eq!(h.length(), 7.0);
        assert!((h.volume() - 7.0 * 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn call_parens_are_distinct_from_grouping() {
        let h = Halstead::from_source("y = f(x) * (x)\n");
        // operators: = () * (
        assert_eq!(h.hdop, 4);
        assert_eq!(h.htop, 4);
    }

    #[test]
    fn keywords_are_operators_literals_are_operands() {
        let h = Halstead::from_source("return None if not x else True\n");
        assert_eq!((h.hdop, h.htop), (4, 4));
        assert_eq!((h.hdnd, h.htoa), (3, 3));
    }

    #[test]
    fn mi_is_clamped() {
        assert_eq!(maintainability_index(0.0, 1.0, 1.0), 171.0 - 0.23);
        assert_eq!(maintainability_index(1e300, 1e6, 1e300), 0.0);
    }
}

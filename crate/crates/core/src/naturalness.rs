//! N-gram naturalness: an add-k smoothed token language model and the
//! per-function cross-entropy (ENT).

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::python::{tokenize as lex, TokenKind};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_K: f64 = 0.01;

/// Lexical tokens of `source` wrapped in sentinels. Layout tokens and
/// comments are dropped.
pub fn tokenize(source: &str) -> Vec<String> {
    let mut out = vec![BOS.to_string()];
    out.extend(
        lex(source)
            .tokens
            .into_iter()
            .filter(|t| t.is_significant() && t.kind != TokenKind::Comment)
            .map(|t| t.text),
    );
    out.push(EOS.to_string());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Smoothing {
    /// Add-k (Lidstone) smoothing with one extra UNK slot in the vocabulary.
    AddK(f64),
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::AddK(DEFAULT_K)
    }
}

/// Token n-gram counts.
///
/// The first token of every sequence is never predicted; it is the
/// begin-of-sequence context. Position `i` is predicted from the previous
/// `min(order - 1, i)` tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    smoothing: Smoothing,
    /// Counts of every k-gram ending at a predicted position, k = 1..=order.
    counts: HashMap<Vec<String>, u64>,
    /// Number of predictions made from each context.
    context_totals: HashMap<Vec<String>, u64>,
    vocabulary: BTreeSet<String>,
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    pub fn count(&self, gram: &[&str]) -> u64 {
        let key: Vec<String> = gram.iter().map(|s| s.to_string()).collect();
        self.counts.get(&key).copied().unwrap_or(0)
    }

    /// P(word | context) under the smoothed model. Only the last
    /// `order - 1` context tokens are used. Out-of-vocabulary words are UNK.
    pub fn probability(&self, context: &[String], word: &str) -> f64 {
        let Smoothing::AddK(k) = self.smoothing;
        let keep = context.len().min(self.order - 1);
        let ctx = &context[context.len() - keep..];
        let total = self.context_totals.get(ctx).copied().unwrap_or(0) as f64;
        let slots = self.vocabulary.len() as f64 + 1.0;
        let denom = total + k * slots;
        if denom == 0.0 {
            return 1.0 / slots;
        }
        let hits = if self.vocabulary.contains(word) {
            let mut key = ctx.to_vec();
            key.push(word.to_string());
            self.counts.get(&key).copied().unwrap_or(0) as f64
        } else {
            0.0
        };
        (hits + k) / denom
    }

    /// Flat text serialization: a header, then one `k-gram TAB count` line
    /// per stored gram in sorted order. Tokens are space-separated with
    /// `\\`, space, tab and newline escaped.
    pub fn to_text(&self) -> String {
        let Smoothing::AddK(k) = self.smoothing;
        let mut out = String::new();
        let _ = writeln!(out, "# ngram-model v1");
        let _ = writeln!(out, "order\t{}", self.order);
        let _ = writeln!(out, "smoothing\tadd-k\t{k}");
        let _ = writeln!(out, "vocab_size\t{}", self.vocabulary.len());
        let mut grams: Vec<(&Vec<String>, &u64)> = self.counts.iter().collect();
        grams.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));
        for (gram, count) in grams {
            let joined: Vec<String> = gram.iter().map(|t| escape(t)).collect();
            let _ = writeln!(out, "{}\t{count}", joined.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::input(format!("malformed n-gram model: {msg}"));
        let mut order = None;
        let mut smoothing = None;
        let mut vocab_size = None;
        let mut counts = HashMap::new();
        for line in text.lines() {
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["order", n] => order = Some(n.parse::<usize>().map_err(|_| bad("order"))?),
                ["smoothing", "add-k", k] => {
                    smoothing = Some(Smoothing::AddK(k.parse().map_err(|_| bad("k"))?))
                }
                ["vocab_size", n] => {
                    vocab_size = Some(n.parse::<usize>().map_err(|_| bad("vocab_size"))?)
                }
                [gram, count] => {
                    let tokens: Vec<String> = gram.split(' ').map(unescape).collect();
                    counts.insert(tokens, count.parse::<u64>().map_err(|_| bad("count"))?);
                }
                _ => return Err(bad(line)),
            }
        }
        let order = order.ok_or_else(|| bad("missing order"))?;
        let smoothing = smoothing.ok_or_else(|| bad("missing smoothing"))?;
        let mut model = NgramModel {
            order,
            smoothing,
            counts,
            context_totals: HashMap::new(),
            vocabulary: BTreeSet::new(),
        };
        model.rebuild_derived();
        if vocab_size != Some(model.vocabulary.len()) {
            return Err(bad("vocabulary size does not match unigram counts"));
        }
        Ok(model)
    }

    fn rebuild_derived(&mut self) {
        self.vocabulary = self
            .counts
            .keys()
            .filter(|g| g.len() == 1)
            .map(|g| g[0].clone())
            .collect();
        self.context_totals.clear();
        for (gram, &c) in &self.counts {
            *self
                .context_totals
                .entry(gram[..gram.len() - 1].to_vec())
                .or_default() += c;
        }
    }
}

fn escape(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    for c in token.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            ' ' => out.push_str("\\s"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    let mut chars = token.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('s') => out.push(' '),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Count all k-grams (k ≤ `order`) ending at predicted positions.
pub fn train_ngram(corpus: &[Vec<String>], order: usize, smoothing: Smoothing) -> Result<NgramModel> {
    if !(1..=5).contains(&order) {
        return Err(Error::input(format!("n-gram order must be in 1..=5, got {order}")));
    }
    let Smoothing::AddK(k) = smoothing;
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::input(format!("smoothing k must be finite and >= 0, got {k}")));
    }
    if corpus.is_empty() {
        return Err(Error::input("training corpus is empty"));
    }
    let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
    for seq in corpus {
        for i in 1..seq.len() {
            let longest = (order - 1).min(i);
            for m in 0..=longest {
                *counts.entry(seq[i - m..=i].to_vec()).or_default() += 1;
            }
        }
    }
    let mut model = NgramModel {
        order,
        smoothing,
        counts,
        context_totals: HashMap::new(),
        vocabulary: BTreeSet::new(),
    };
    model.rebuild_derived();
    Ok(model)
}

/// Cross-entropy in bits per predicted token:
/// `-(1/N) Σ log2 P(t_i | context_i)` over positions 1..len.
/// Sequences with nothing to predict score 0.
pub fn cross_entropy(model: &NgramModel, tokens: &[String]) -> f64 {
    if tokens.len() < 2 {
        return 0.0;
    }
    let mut bits = 0.0;
    for i in 1..tokens.len() {
        let start = i.saturating_sub(model.order - 1);
        bits -= model.probability(&tokens[start..i], &tokens[i]).log2();
    }
    let ent = bits / (tokens.len() - 1) as f64;
    // -0.0 when every probability is exactly 1
    ent.max(0.0)
}

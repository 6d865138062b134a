//! Train a token n-gram model on some Python files and score functions by
//! cross-entropy (bits per token). Lower means more predictable code.
//!
//! Usage: `naturalness TRAIN.py... -- SCORE.py`. Without arguments a small
//! built-in corpus is used.

use resfault::naturalness::{cross_entropy, tokenize, train_ngram, Smoothing, DEFAULT_ORDER};
use resfault::python::parse_source;

const CORPUS: [&str; 3] = [
    "def add(a, b):\n    return a + b\n",
    "def total(items):\n    result = 0\n    for item in items:\n        result = result + item\n    return result\n",
    "def mean(items):\n    return total(items) / len(items)\n",
];

const TARGET: &str = "def count(items):\n    result = 0\n    for item in items:\n        result = result + 1\n    return result\n\n\ndef odd(q):\n    return {q: [q] * 3 for q in q if q % 2}\n";

fn main() -> resfault::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (train, target) = match args.iter().position(|a| a == "--") {
        Some(i) => {
            let read = |p: &String| std::fs::read_to_string(p).map_err(|e| resfault::Error::io(p, e));
            let train = args[..i].iter().map(read).collect::<resfault::Result<Vec<_>>>()?;
            (train, read(&args[i + 1])?)
        }
        None => (CORPUS.iter().map(|s| s.to_string()).collect(), TARGET.to_string()),
    };
    let corpus: Vec<Vec<String>> = train.iter().map(|s| tokenize(s)).collect();
    let model = train_ngram(&corpus, DEFAULT_ORDER, Smoothing::default())?;
    println!("vocabulary: {} tokens", model.vocabulary().len());

    let parsed = parse_source("target.py", &target)?;
    for unit in parsed.root.methods() {
        let ent = cross_entropy(&model, &tokenize(&unit.body_text));
        println!("{:<10} ENT = {ent:.3}", unit.qualified_name);
    }
    Ok(())
}

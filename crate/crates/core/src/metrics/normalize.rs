//! Identifier and literal anonymisation for method source.

use std::collections::HashMap;

use regex::Regex;

use crate::python::{lexer::is_keyword, parse_source, TokenKind};

/// Builtin names kept verbatim by [`normalize_code`].
pub const BUILTINS: &[&str] = &[
    "abs", "all", "any", "ascii", "bin", "bool", "breakpoint", "bytearray", "bytes", "callable",
    "chr", "classmethod", "compile", "complex", "delattr", "dict", "dir", "divmod", "enumerate",
    "eval", "exec", "filter", "float", "format", "frozenset", "getattr", "globals", "hasattr",
    "hash", "help", "hex", "id", "input", "int", "isinstance", "issubclass", "iter", "len",
    "list", "locals", "map", "max", "memoryview", "min", "next", "object", "oct", "open", "ord",
    "pow", "print", "property", "range", "repr", "reversed", "round", "set", "setattr", "slice",
    "sorted", "staticmethod", "str", "sum", "super", "tuple", "type", "vars", "zip",
    "__import__", "NotImplemented", "Ellipsis", "BaseException", "Exception", "ArithmeticError",
    "AssertionError", "AttributeError", "EOFError", "FileNotFoundError", "ImportError",
    "IndexError", "KeyError", "KeyboardInterrupt", "LookupError", "MemoryError",
    "NameError", "NotImplementedError", "OSError", "IOError", "OverflowError",
    "PermissionError", "RecursionError", "RuntimeError", "StopIteration", "SyntaxError",
    "SystemExit", "TimeoutError", "TypeError", "UnicodeError", "ValueError",
    "ZeroDivisionError", "Warning", "DeprecationWarning", "UserWarning",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub text: String,
    /// Set when the source could not be tokenized cleanly; only comments
    /// were stripped.
    pub fallback: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Class {
    Var,
    Num,
    Str,
}

fn placeholder_class(name: &str) -> Class {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"^(var|num|str)\d+$").unwrap());
    match re.captures(name).map(|c| c.get(1).unwrap().as_str()) {
        Some("num") => Class::Num,
        Some("str") => Class::Str,
        _ => Class::Var,
    }
}

#[derive(Default)]
struct Namer {
    maps: HashMap<Class, HashMap<String, usize>>,
}

impl Namer {
    fn name(&mut self, class: Class, key: &str, literal: bool) -> String {
        let map = self.maps.entry(class).or_default();
        let next = map.len();
        let n = *map.entry(key.to_string()).or_insert(next);
        match class {
            Class::Var => format!("var{n}"),
            Class::Num => format!("num{n}"),
            Class::Str if literal => format!("\"str{n}\""),
            Class::Str => format!("str{n}"),
        }
    }
}

/// Anonymise identifiers and literals in a method.
///
/// Comments, docstrings and blank lines are removed. Identifiers become
/// `var0, var1, ...` in first-occurrence order, string literals `"str0", ...`
/// and numeric literals `num0, ...`; keywords and builtins are kept. Lines
/// preceding the first `def`/`class`/decorator are treated as extraction
/// noise and dropped. The result is idempotent.
pub fn normalize_code(source: &str) -> Normalized {
    let source = drop_leading_noise(source);
    let parsed = match parse_source("<snippet>", source) {
        Ok(p) if !p.lexed.has_errors() => p,
        _ => {
            return Normalized {
                text: tidy(&strip_comments(source)),
                fallback: true,
            }
        }
    };
    let mut namer = Namer::default();
    let mut out = String::with_capacity(source.len());
    let mut cursor = 0;
    for (i, t) in parsed.lexed.tokens.iter().enumerate() {
        let replacement = match t.kind {
            TokenKind::Comment => Some(String::new()),
            _ if parsed.docstring_tokens[i] => Some(String::new()),
            TokenKind::Name if !is_keyword(&t.text) && !BUILTINS.contains(&t.text.as_str()) => {
                Some(namer.name(placeholder_class(&t.text), &t.text, false))
            }
            TokenKind::Number => Some(namer.name(Class::Num, &t.text, true)),
            TokenKind::String => Some(namer.name(Class::Str, &t.text, true)),
            _ => None,
        };
        if let Some(r) = replacement {
            out.push_str(&source[cursor..t.start]);
            out.push_str(&r);
            cursor = t.end;
        }
    }
    out.push_str(&source[cursor..]);
    Normalized {
        text: tidy(&out),
        fallback: false,
    }
}

fn is_definition_line(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("def ") || t.starts_with("async def ") || t.starts_with('@') || t.starts_with("class ")
}

fn drop_leading_noise(source: &str) -> &str {
    let mut offset = 0;
    for line in source.split_inclusive('\n') {
        if is_definition_line(line) {
            return &source[offset..];
        }
        offset += line.len();
    }
    source
}

/// Remove `#` comments outside string quotes, line by line.
fn strip_comments(source: &str) -> String {
    source
        .lines()
        .map(|line| {
            let mut quote: Option<char> = None;
            let mut escaped = false;
            for (i, c) in line.char_indices() {
                match quote {
                    Some(q) => {
                        if escaped {
                            escaped = false;
                        } else if c == '\\' {
                            escaped = true;
                        } else if c == q {
                            quote = None;
                        }
                    }
                    None if c == '"' || c == '\'' => quote = Some(c),
                    None if c == '#' => return &line[..i],
                    None => {}
                }
            }
            line
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Drop blank lines, trim trailing space, dedent.
fn tidy(text: &str) -> String {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty() && l.trim() != "\\")
        .collect();
    let indent = lines
        .iter()
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    lines
        .iter()
        .map(|l| &l[indent.min(l.len() - l.trim_start().len())..])
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rewrites_identifiers_and_literals() {
        let n = normalize_code("def area(r): return 3.14 * r");
        assert_eq!(n.text, "def var0(var1): return num0 * var1");
        assert!(!n.fallback);
    }

    #[test]
    fn drops_comments_docstrings_and_keeps_builtins() {
        let src = "    def f(xs):\n        \"\"\"Sum.\"\"\"\n        # loop\n\n        return len(xs) + sum(xs, 'a')  # done\n";
        let n = normalize_code(src);
        assert_eq!(n.text, "def var0(var1):\n    return len(var1) + sum(var1, \"str0\")");
    }

    #[test]
    fn idempotent() {
        let src = "def f(a, num1, str3, b):\n    str3 = 'q'\n    s = 'x' + \"y\" + 'x'\n    return a + num1 * 7 + b.num0\n";
        let once = normalize_code(src).text;
        assert_eq!(normalize_code(&once).text, once);
    }

    #[test]
    fn alpha_equivalent_methods_match() {
        let a = normalize_code("def total(items):\n    acc = 0\n    for it in items:\n        acc += it\n    return acc\n");
        let b = normalize_code("def sum_up(xs):\n    s = 0\n    for x in xs:\n        s += x\n    return s\n");
        assert_eq!(a.text, b.text);
    }

    #[test]
    fn fallback_strips_comments_only() {
        let n = normalize_code("def f(:\n    x = '#not' # yes\n");
        assert!(n.fallback || n.text.contains("var0"));
        let n = normalize_code("def f():\n    return 'unterminated # still\n");
        assert!(n.fallback);
        assert_eq!(n.text, "def f():\n    return 'unterminated # still");
    }

    #[test]
    fn leading_noise_dropped() {
        let n = normalize_code("x = 1\n@decorator\ndef f():\n    pass\n");
        assert_eq!(n.text, "@var0\ndef var1():\n    pass");
    }
}

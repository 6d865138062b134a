//! Project-wide index of classes and call references, used for fan-in,
//! fan-out and inheritance metrics.
//!
//! Resolution is by bare name. Calls through variables, `getattr` and other
//! dynamic dispatch are not resolved, so fan counts are a lower bound.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::python::{is_callable_prefix, ParsedFile, SyntaxUnit, TokenKind, UnitKind};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub qualified_name: String,
    pub name: String,
    /// Bare names of listed base classes, `object` excluded.
    pub bases: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub qualified_name: String,
    pub name: String,
    /// Bare names this method calls.
    pub calls: BTreeSet<String>,
}

/// What the project index needs to know about one file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSummary {
    pub classes: Vec<ClassSummary>,
    pub methods: Vec<MethodSummary>,
}

impl FileSummary {
    pub fn of(file: &ParsedFile) -> Self {
        let mut out = FileSummary::default();
        for unit in file.root.descendants() {
            match unit.kind {
                UnitKind::Class => out.classes.push(ClassSummary {
                    qualified_name: unit.qualified_name.clone(),
                    name: unit.name.clone(),
                    bases: base_classes(file, unit),
                }),
                UnitKind::Method => out.methods.push(MethodSummary {
                    qualified_name: unit.qualified_name.clone(),
                    name: unit.name.clone(),
                    calls: calls(file, unit),
                }),
                UnitKind::File => {}
            }
        }
        out
    }
}

/// Bare names of a class's bases, in order. Keyword arguments
/// (`metaclass=...`), star-args and `object` are dropped.
pub fn base_classes(file: &ParsedFile, unit: &SyntaxUnit) -> Vec<String> {
    let Some(id) = unit.stmt else { return Vec::new() };
    let header = file.tree.stmt(id).tokens.clone();
    let toks: Vec<usize> = header
        .filter(|&i| file.token(i).is_significant())
        .collect();
    // class NAME ( ... ) :
    if toks.len() < 4 || !file.token(toks[2]).is_op("(") {
        return Vec::new();
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new()];
    let mut depth = 0;
    for &i in &toks[3..toks.len() - 1] {
        let t = file.token(i);
        if t.kind == TokenKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" if depth == 0 => break,
                ")" | "]" | "}" => depth -= 1,
                "," if depth == 0 => {
                    groups.push(Vec::new());
                    continue;
                }
                _ => {}
            }
        }
        groups.last_mut().unwrap().push(i);
    }
    let mut bases = Vec::new();
    for g in groups {
        if g.is_empty() {
            continue;
        }
        let first = file.token(g[0]);
        if first.is_op("*") || first.is_op("**") {
            continue;
        }
        if g.len() > 1 && file.token(g[1]).is_op("=") {
            continue;
        }
        // last dotted name before any subscript: `typing.Generic[T]` -> Generic
        let mut name = None;
        for &i in &g {
            let t = file.token(i);
            if t.is_op("[") || t.is_op("(") {
                break;
            }
            if t.kind == TokenKind::Name {
                name = Some(t.text.clone());
            }
        }
        if let Some(name) = name.filter(|n| n != "object") {
            bases.push(name);
        }
    }
    bases
}

/// Bare names called from a method's own code.
pub fn calls(file: &ParsedFile, unit: &SyntaxUnit) -> BTreeSet<String> {
    let Some(id) = unit.stmt else { return BTreeSet::new() };
    let toks = file.scope_tokens(id);
    // the def header `def name(` is not a call
    let header = file.tree.stmt(id).tokens.clone();
    let def_name = header
        .clone()
        .find(|&i| file.token(i).is_name("def"))
        .map(|i| i + 1);
    let mut out = BTreeSet::new();
    for w in toks.windows(2) {
        let (a, b) = (file.token(w[0]), file.token(w[1]));
        if Some(w[0]) != def_name
            && a.kind == TokenKind::Name
            && !a.is_keyword()
            && b.is_op("(")
            && is_callable_prefix(a)
        {
            out.insert(a.text.clone());
        }
    }
    out
}

#[derive(Debug, Clone)]
struct ClassEntry {
    key: String,
    bases: Vec<String>,
}

/// Read-only view of every class and method at one commit.
#[derive(Debug, Clone, Default)]
pub struct ProjectIndex {
    classes: BTreeMap<String, Vec<ClassEntry>>,
    /// Bare method name -> number of definitions.
    defined: HashMap<String, usize>,
    /// Bare callee name -> keys of methods calling it.
    callers: HashMap<String, BTreeSet<String>>,
    subclasses: HashMap<String, BTreeSet<String>>,
}

/// Unique key of a unit across the project.
pub fn unit_key(path: &str, qualified_name: &str) -> String {
    format!("{path}::{qualified_name}")
}

impl ProjectIndex {
    pub fn build<'a>(files: impl IntoIterator<Item = (&'a str, &'a FileSummary)>) -> Self {
        let mut index = ProjectIndex::default();
        for (path, summary) in files {
            for c in &summary.classes {
                let key = unit_key(path, &c.qualified_name);
                for base in &c.bases {
                    index
                        .subclasses
                        .entry(base.clone())
                        .or_default()
                        .insert(key.clone());
                }
                index.classes.entry(c.name.clone()).or_default().push(ClassEntry {
                    key,
                    bases: c.bases.clone(),
                });
            }
            for m in &summary.methods {
                *index.defined.entry(m.name.clone()).or_default() += 1;
                let key = unit_key(path, &m.qualified_name);
                for callee in &m.calls {
                    index
                        .callers
                        .entry(callee.clone())
                        .or_default()
                        .insert(key.clone());
                }
            }
        }
        for entries in index.classes.values_mut() {
            entries.sort_by(|a, b| a.key.cmp(&b.key));
        }
        index
    }

    pub fn is_defined(&self, name: &str) -> bool {
        self.defined.contains_key(name)
    }

    /// FO: distinct in-project names called by the method, itself excluded.
    pub fn fan_out(&self, method: &MethodSummary) -> usize {
        method
            .calls
            .iter()
            .filter(|c| **c != method.name && self.is_defined(c))
            .count()
    }

    /// FI: distinct methods elsewhere in the project calling this name.
    pub fn fan_in(&self, path: &str, method: &MethodSummary) -> usize {
        let me = unit_key(path, &method.qualified_name);
        self.callers
            .get(&method.name)
            .map_or(0, |set| set.iter().filter(|k| **k != me).count())
    }

    /// DIT with the implicit `object` root counted: a class without
    /// in-project bases has depth 1.
    pub fn depth_of_inheritance(&self, path: &str, class: &ClassSummary) -> usize {
        let key = unit_key(path, &class.qualified_name);
        let mut visiting = Vec::new();
        self.dit(&key, &class.bases, &mut visiting)
    }

    fn dit(&self, key: &str, bases: &[String], visiting: &mut Vec<String>) -> usize {
        visiting.push(key.to_string());
        let mut deepest = 0;
        for base in bases {
            let resolved = self
                .classes
                .get(base)
                .and_then(|entries| entries.iter().find(|e| !visiting.contains(&e.key)));
            if let Some(entry) = resolved {
                let entry = entry.clone();
                deepest = deepest.max(self.dit(&entry.key, &entry.bases, visiting));
            }
        }
        visiting.pop();
        1 + deepest
    }

    /// DCs: classes anywhere in the project listing this class's name as a base.
    pub fn derived_classes(&self, class: &ClassSummary) -> usize {
        self.subclasses.get(&class.name).map_or(0, |s| s.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::python::parse_source;

    fn summary(src: &str) -> FileSummary {
        FileSummary::of(&parse_source("m.py", src).unwrap())
    }

    #[test]
    fn bases_are_bare_names() {
        let s = summary("class A(object): pass\nclass B(pkg.Base, Generic[T], metaclass=M): pass\nclass C: pass\n");
        let bases: Vec<Vec<String>> = s.classes.iter().map(|c| c.bases.clone()).collect();
        assert_eq!(bases, vec![vec![], vec!["Base".to_string(), "Generic".to_string()], vec![]]);
    }

    #[test]
    fn calls_exclude_definition_header() {
        let s = summary("def f(x):\n    g(x)\n    obj.h()\n    return len(x)\n");
        let calls: Vec<&str> = s.methods[0].calls.iter().map(|s| s.as_str()).collect();
        assert_eq!(calls, ["g", "h", "len"]);
    }

    #[test]
    fn recursion_is_a_call() {
        let s = summary("def f(n):\n    return f(n - 1)\n");
        assert!(s.methods[0].calls.contains("f"));
    }

    #[test]
    fn inheritance_chain() {
        let s = summary("class A: pass\nclass B(A): pass\nclass C(B): pass\nclass D(External): pass\n");
        let index = ProjectIndex::build([("m.py", &s)]);
        let dit: Vec<usize> = s
            .classes
            .iter()
            .map(|c| index.depth_of_inheritance("m.py", c))
            .collect();
        assert_eq!(dit, [1, 2, 3, 1]);
        assert_eq!(index.derived_classes(&s.classes[0]), 1);
        assert_eq!(index.derived_classes(&s.classes[2]), 0);
    }

    #[test]
    fn inheritance_cycle_terminates() {
        let s = summary("class A(B): pass\nclass B(A): pass\n");
        let index = ProjectIndex::build([("m.py", &s)]);
        assert_eq!(index.depth_of_inheritance("m.py", &s.classes[0]), 2);
    }
}

//! Print the product metric vector of every method in a Python file.
//!
//! Usage: `cargo run --example product_metrics [FILE.py]`

use resfault::catalog::product_columns;
use resfault::metrics::{file_method_rows, FileSummary, ProjectIndex};
use resfault::python::parse_source;

const SAMPLE: &str = r#"class Stack:
    def __init__(self):
        self.items = []

    def push(self, x):
        self.items.append(x)

    def pop(self):
        if not self.items:
            raise IndexError("empty")
        return self.items.pop()
"#;

fn main() -> resfault::Result<()> {
    let (path, source) = match std::env::args().nth(1) {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| resfault::Error::io(&p, e))?;
            (p, text)
        }
        None => ("stack.py".to_string(), SAMPLE.to_string()),
    };
    let parsed = parse_source(&path, &source)?;
    let summary = FileSummary::of(&parsed);
    let index = ProjectIndex::build([(path.as_str(), &summary)]);
    let columns = product_columns();
    for row in file_method_rows(&path, &parsed, &index) {
        println!("{} (lines {}-{})", row.qualified_name, row.span.0, row.span.1);
        for (name, v) in columns.iter().zip(&row.metrics.values) {
            println!("  {name:<9}{v}");
        }
    }
    Ok(())
}

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Stamped into every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub tool_version: String,
}

impl Provenance {
    pub fn new(seed: u64, config_hash: &str) -> Self {
        Provenance {
            seed,
            config_hash: config_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// The comment line that opens CSV artifacts.
    pub fn csv_comment(&self) -> String {
        format!(
            "# resfault seed={} config={} version={}\n",
            self.seed, self.config_hash, self.tool_version
        )
    }

    /// Parse a [`Provenance::csv_comment`] line.
    pub fn from_csv_comment(line: &str) -> Option<Self> {
        let rest = line.trim().strip_prefix("# resfault ")?;
        let mut seed = None;
        let mut config = None;
        let mut version = None;
        for part in rest.split_whitespace() {
            match part.split_once('=')? {
                ("seed", v) => seed = v.parse().ok(),
                ("config", v) => config = Some(v.to_string()),
                ("version", v) => version = Some(v.to_string()),
                _ => {}
            }
        }
        Some(Provenance {
            seed: seed?,
            config_hash: config?,
            tool_version: version?,
        })
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::input(format!("missing input {}", path.display())),
        _ => Error::io(path, e),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::input(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

/// A CSV table held as strings, with its provenance comment if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub provenance: Option<Provenance>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table {
            provenance: None,
            header,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = w
            .into_inner()
            .map_err(|e| Error::input(format!("csv: {e}")))?;
        let mut out = self
            .provenance
            .as_ref()
            .map(Provenance::csv_comment)
            .unwrap_or_default();
        out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv()?.as_bytes())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let provenance = text.lines().next().and_then(Provenance::from_csv_comment);
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = rdr.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(String::from).collect());
        }
        Ok(Table {
            provenance,
            header,
            rows,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?).map_err(|e| match e {
            Error::Csv(c) => Error::input(format!("{}: {c}", path.display())),
            other => other,
        })
    }
}

/// Shortest round-tripping decimal form.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

pub fn parse_f64(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::input(format!("{what}: not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::input(format!("{what}: non-finite value {s:?}")));
    }
    Ok(v)
}

//! Artifacts: CSV series with a `#` header block, JSON documents, verdicts.
//! Every file is written to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn config_hash(canonical: &str) -> String {
    let d = Sha256::digest(canonical.as_bytes());
    d.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub version: String,
    pub config_hash: String,
    pub command: String,
}

impl Header {
    pub fn new(command: &str, hash: &str) -> Self {
        Self {
            version: VERSION.to_string(),
            config_hash: hash.to_string(),
            command: command.to_string(),
        }
    }
}

/// Write `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(io)
}

/// A table rendered as CSV after the header block.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header) -> String {
        let mut s = format!(
            "# weylscope {}\n# config-hash {}\n# command {}\n",
            header.version, header.config_hash, header.command
        );
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip formatting; empty for missing values.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Threshold {
    AtMost(f64),
    LessThan(f64),
    AtLeast(f64),
    GreaterThan(f64),
    Within(f64, f64),
}

impl Threshold {
    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Threshold::AtMost(t) => x <= t,
            Threshold::LessThan(t) => x < t,
            Threshold::AtLeast(t) => x >= t,
            Threshold::GreaterThan(t) => x > t,
            Threshold::Within(a, b) => x >= a && x <= b,
        }
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Threshold::AtMost(t) => write!(f, "<= {t:e}"),
            Threshold::LessThan(t) => write!(f, "< {t:e}"),
            Threshold::AtLeast(t) => write!(f, ">= {t:e}"),
            Threshold::GreaterThan(t) => write!(f, "> {t:e}"),
            Threshold::Within(a, b) => write!(f, "in [{a}, {b}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    /// Identifier of the statement under test.
    pub tag: String,
    pub statement: String,
    pub measured: f64,
    pub threshold: Threshold,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Claim {
    pub fn new(tag: &str, statement: &str, measured: f64, threshold: Threshold) -> Self {
        Self {
            tag: tag.to_string(),
            statement: statement.to_string(),
            measured,
            threshold,
            pass: threshold.holds(measured),
            note: String::new(),
        }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub scenario: String,
    pub claims: Vec<Claim>,
    pub provenance: Provenance,
}

impl Verdict {
    pub fn pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.claims
            .iter()
            .map(|c| {
                format!(
                    "{} {} [{}] measured {:.6e} (need {}){}",
                    if c.pass { "PASS" } else { "FAIL" },
                    self.scenario,
                    c.tag,
                    c.measured,
                    c.threshold,
                    if c.note.is_empty() { String::new() } else { format!("; {}", c.note) }
                )
            })
            .collect()
    }
}

/// JSON document with the header block under `header`.
pub fn json_document<T: Serialize>(header: &Header, body: &T) -> String {
    let doc = serde_json::json!({ "header": header, "body": body });
    let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
    s.push('\n');
    s
}

/// Resolved output location.
#[derive(Debug, Clone)]
pub struct OutDir {
    pub root: PathBuf,
}

impl OutDir {
    pub fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_and_header() {
        let dir = std::env::temp_dir().join(format!("weylscope-out-{}", std::process::id()));
        let p = dir.join("a.csv");
        let mut t = Csv::new(&["x", "y"]);
        t.push(vec![num(0.1), opt(None)]);
        let text = t.render(&Header::new("count", "abc"));
        write_atomic(&p, text.as_bytes()).unwrap();
        let back = std::fs::read_to_string(&p).unwrap();
        assert_eq!(back, "# weylscope 0.1.0\n# config-hash abc\n# command count\nx,y\n0.1,\n");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn thresholds() {
        assert!(Threshold::Within(0.5, 4.0).holds(0.5));
        assert!(!Threshold::LessThan(1.0).holds(1.0));
        assert_eq!(config_hash("").len(), 64);
    }
}

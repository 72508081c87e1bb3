//! Tabular outputs: CSV files preceded by `# key: value` provenance lines.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "DOTEDGE_OUT";
const DEFAULT_OUT_ROOT: &str = "dotedge-out";

/// `explicit` if given, else `<root>/<name>` with the root from the
/// environment.
pub fn out_dir(explicit: Option<&Path>, name: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_OUT_ROOT.into());
            root.join(name)
        }
    }
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Ordered provenance lines shared by every output of one invocation.
#[derive(Clone, Debug, Default)]
pub struct Provenance {
    lines: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str) -> Self {
        let mut p = Self::default();
        p.push("generator", format!("dotedge {}", env!("CARGO_PKG_VERSION")));
        p.push("command", command);
        p
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_json(&mut self, key: &str, value: &impl Serialize) -> &mut Self {
        let json = serde_json::to_string(value).expect("config serializes");
        self.push(key, json)
    }

    fn header(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
    }
}

/// Writes `rows` under `headers` to `path` after the provenance lines.
pub fn write_csv<R: Serialize>(path: &Path, provenance: &Provenance, headers: &[&str], rows: &[R]) -> Result<()> {
    let mut buf = provenance.header().into_bytes();
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
        w.write_record(headers).map_err(|e| CliError::csv(path, e))?;
        for row in rows {
            w.serialize(row).map_err(|e| CliError::csv(path, e))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

/// One JSON document per line.
pub fn write_jsonl<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, row).map_err(|e| CliError::Schema(e.to_string()))?;
        buf.write_all(b"\n").expect("writing to memory");
    }
    fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

/// Reads a CSV written by [`write_csv`], skipping provenance lines.
pub fn read_csv<R: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| CliError::csv(path, e))).collect()
}

/// Reads a line-delimited JSON file.
pub fn read_jsonl<R: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Schema(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

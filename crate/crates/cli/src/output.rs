//! Output files and provenance. Every file the tool writes records the
//! SHA-256 digest of the config it was produced from, the tool version, and
//! the run seed, so results can be traced back to their inputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub tool_version: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_bytes: &[u8], seed: u64) -> Self {
        let digest = Sha256::digest(config_bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        Self {
            config_sha256: hex,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
        }
    }

    pub fn to_value(&self) -> Value {
        json!({
            "config_sha256": self.config_sha256,
            "tool_version": self.tool_version,
            "seed": self.seed,
        })
    }

    /// `#`-prefixed comment lines for CSV files.
    pub fn csv_header(&self) -> String {
        format!(
            "# config_sha256: {}\n# tool_version: {}\n# seed: {}\n",
            self.config_sha256, self.tool_version, self.seed
        )
    }
}

/// Resolve the output directory (creating it if needed) and return the full
/// path for `file_name` inside it.
pub fn out_path(out_dir: &Path, file_name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    Ok(out_dir.join(file_name))
}

/// Write a JSON document (already carrying provenance and schema_version).
pub fn write_json(path: &Path, doc: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).context("cannot serialize output")?;
    std::fs::write(path, text + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Write a CSV body under provenance comment lines.
pub fn write_csv(path: &Path, provenance: &Provenance, body: &str) -> Result<()> {
    let text = format!("{}{}", provenance.csv_header(), body);
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Wrap a command-specific payload into the common document envelope.
pub fn envelope(command: &str, provenance: &Provenance, payload: Value) -> Value {
    let mut doc = json!({
        "schema_version": 1,
        "command": command,
        "provenance": provenance.to_value(),
    });
    if let (Value::Object(doc_map), Value::Object(payload_map)) = (&mut doc, payload) {
        for (k, v) in payload_map {
            doc_map.insert(k, v);
        }
    }
    doc
}

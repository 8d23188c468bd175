use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// First line of every CSV file.
pub const CSV_SCHEMA: &str = "lossqfi-csv/1";

/// 17 significant digits, so every `f64` round-trips.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Builds a CSV document with a schema comment, a header row and data rows.
pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(kind: &str, header: &[&str]) -> Self {
        let mut text = format!("# {CSV_SCHEMA} {kind}\n");
        text.push_str(&header.join(","));
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

/// Writes files one at a time into `dir`, recording their digests.
pub struct OutputSet {
    dir: PathBuf,
    pub digests: Vec<OutputDigest>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            digests: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.digests.push(OutputDigest {
            file: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

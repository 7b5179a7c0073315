//! Self-describing JSON reports.
//!
//! Every report carries the tool version, the effective configuration,
//! seeds and SHA-256 digests of its inputs, and nothing time-dependent, so
//! equal inputs give byte-identical files.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub seeds: Value,
    pub inputs: Vec<InputDigest>,
    pub warnings: Vec<String>,
    pub result: Value,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config: Value::Null,
            seeds: Value::Null,
            inputs: Vec::new(),
            warnings: Vec::new(),
            result: Value::Null,
        }
    }

    pub fn config<T: Serialize>(mut self, cfg: &T) -> Result<Self> {
        self.config = serde_json::to_value(cfg)?;
        Ok(self)
    }

    pub fn seeds<T: Serialize>(mut self, seeds: &T) -> Result<Self> {
        self.seeds = serde_json::to_value(seeds)?;
        Ok(self)
    }

    pub fn input(mut self, role: &str, path: &Path) -> Result<Self> {
        self.inputs.push(InputDigest {
            role: role.into(),
            path: path.display().to_string(),
            sha256: digest_path(path)?,
        });
        Ok(self)
    }

    pub fn result<T: Serialize>(mut self, result: &T) -> Result<Self> {
        self.result = serde_json::to_value(result)?;
        Ok(self)
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Hex SHA-256 of a file, or of a directory's regular files taken in name
/// order as `name NUL contents NUL`.
pub fn digest_path(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for f in files {
            hasher.update(f.file_name().unwrap_or_default().as_encoded_bytes());
            hasher.update([0]);
            hash_file(&f, &mut hasher)?;
            hasher.update([0]);
        }
    } else {
        hash_file(path, &mut hasher)?;
    }
    Ok(hex::encode(hasher.finalize()))
}

fn hash_file(path: &Path, hasher: &mut Sha256) -> Result<()> {
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Ok(());
        }
        hasher.update(&buf[..n]);
    }
}

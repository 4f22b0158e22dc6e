//! Output files. Every file carries the config hash and the seed: CSV files
//! in a leading `#` line, JSON files as top-level fields.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::{Failure, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Output directory of one run.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub config_hash: String,
    pub seed: u64,
    started: String,
}

impl Sink {
    pub fn create(dir: &Path, config_hash: &str, seed: u64) -> Outcome<Self> {
        fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            config_hash: config_hash.to_string(),
            seed,
            started: now(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Outcome<PathBuf> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, bytes).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
        Ok(p)
    }

    pub fn tag_line(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }

    /// CSV body produced by `body`, after the tag line.
    pub fn csv<F>(&self, name: &str, body: F) -> Outcome<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> boolmodel::Result<()>,
    {
        let mut buf = self.tag_line().into_bytes();
        body(&mut buf)?;
        self.write(name, &buf)
    }

    /// JSON object `{config_hash, seed, <key>: value}`.
    pub fn json<T: Serialize>(&self, name: &str, key: &str, value: &T) -> Outcome<PathBuf> {
        let mut obj = serde_json::Map::new();
        obj.insert("config_hash".into(), self.config_hash.clone().into());
        obj.insert("seed".into(), self.seed.into());
        let v = serde_json::to_value(value).map_err(|e| Failure::Input(e.to_string()))?;
        obj.insert(key.into(), v);
        let mut text = serde_json::to_string_pretty(&obj).map_err(|e| Failure::Input(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn raw(&self, name: &str, bytes: &[u8]) -> Outcome<PathBuf> {
        self.write(name, bytes)
    }

    /// Writes `manifest.json`; called last.
    pub fn finish(&self) -> Outcome<Manifest> {
        let m = Manifest {
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started: self.started.clone(),
            finished: now(),
        };
        let mut text = serde_json::to_string_pretty(&m).map_err(|e| Failure::Input(e.to_string()))?;
        text.push('\n');
        self.write("manifest.json", text.as_bytes())?;
        Ok(m)
    }
}

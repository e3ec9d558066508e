//! Result emission: CSV tables, JSON documents, and the run manifest with
//! file digests. Identical (config, seed) pairs produce byte-identical
//! result files; only the manifest carries wall-clock data.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub struct OutputWriter {
    dir: PathBuf,
    prefix: String,
    files: Vec<FileRecord>,
    tasks: Vec<TaskRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskRecord {
    pub name: String,
    pub wall_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub artifact_version: &'static str,
    pub timestamp: String,
    pub seed: u64,
    pub config: &'a crate::config::RunConfig,
    pub tasks: &'a [TaskRecord],
    pub files: &'a [FileRecord],
}

impl OutputWriter {
    pub fn new(dir: &Path, prefix: &str) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            prefix: prefix.to_string(),
            files: Vec::new(),
            tasks: Vec::new(),
        })
    }

    fn record(&mut self, name: String, bytes: &[u8]) {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        self.files.push(FileRecord {
            name,
            sha256: hex,
            bytes: bytes.len(),
        });
    }

    pub fn write_bytes(&mut self, suffix: &str, bytes: &[u8]) -> Result<PathBuf> {
        let name = format!("{}_{suffix}", self.prefix);
        let path = self.dir.join(&name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.record(name, bytes);
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, suffix: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(&format!("{suffix}.json"), text.as_bytes())
    }

    pub fn write_csv(&mut self, suffix: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
        let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        self.write_bytes(&format!("{suffix}.csv"), text.as_bytes())
    }

    pub fn time_task<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.tasks.push(TaskRecord {
            name: name.to_string(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(out)
    }

    /// Write the manifest last; every result file carries its digest here.
    pub fn finish(mut self, config: &crate::config::RunConfig, seed: u64) -> Result<PathBuf> {
        let manifest = RunManifest {
            artifact_version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            seed,
            config,
            tasks: &self.tasks,
            files: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let name = format!("{}_manifest.json", self.prefix);
        let path = self.dir.join(&name);
        fs::write(&path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
        self.files.clear();
        Ok(path)
    }
}

/// Deterministic float formatting for CSV cells: shortest roundtrip form.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

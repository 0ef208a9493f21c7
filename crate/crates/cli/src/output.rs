//! Output directories and run manifests.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

/// Environment variable overriding the default output root `./out`.
pub const OUT_ROOT_ENV: &str = "AOI_OUT_DIR";

/// Everything needed to re-run a command and locate what it wrote.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub tool_version: String,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub wall_clock_seconds: f64,
}

/// Output directory of one command invocation.
pub struct RunDir {
    dir: PathBuf,
    command: String,
    outputs: Vec<String>,
    started: Instant,
    started_at: chrono::DateTime<chrono::Local>,
}

impl RunDir {
    /// Uses `out` if given, else `$AOI_OUT_DIR/<command>-<timestamp>` or
    /// `./out/<command>-<timestamp>`.
    pub fn create(command: &str, out: Option<&Path>) -> Result<Self> {
        let started_at = chrono::Local::now();
        let dir = match out {
            Some(p) => p.to_path_buf(),
            None => {
                let root = std::env::var_os(OUT_ROOT_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("out"));
                root.join(format!("{command}-{}", started_at.format("%Y%m%d-%H%M%S%.3f")))
            }
        };
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir,
            command: command.to_string(),
            outputs: Vec::new(),
            started: Instant::now(),
            started_at,
        })
    }

    /// Opens `name` for writing and records it in the manifest.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        Ok(())
    }

    /// Writes `manifest.json` and returns the directory.
    pub fn finish<P: Serialize>(self, parameters: &P, seeds: Vec<u64>) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command.clone(),
            parameters: serde_json::to_value(parameters)?,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
            outputs: self.outputs.clone(),
            started_at: self.started_at.to_rfc3339(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = self.dir.join("manifest.json");
        let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &manifest)?;
        Ok(self.dir)
    }
}

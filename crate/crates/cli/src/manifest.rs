use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use hapke_elmm::io::write_json;
use serde::Serialize;
use serde_json::Value;

/// Record of one successful run, written as `manifest.json` in the output
/// directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
}

pub struct Run {
    command: &'static str,
    start: Instant,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn start(command: &'static str) -> Self {
        Self {
            command,
            start: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn finish(self, out: &Path, seed: Option<u64>, config: Value, summary: Option<Value>) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: self.inputs,
            outputs: self.outputs,
            duration_seconds: self.start.elapsed().as_secs_f64(),
            summary,
        };
        write_json(&out.join("manifest.json"), &manifest)?;
        Ok(())
    }
}

pub fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| hapke_elmm::Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub config: serde_json::Value,
    pub timings_ms: BTreeMap<String, f64>,
    #[serde(skip)]
    clock: Option<Instant>,
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            config: serde_json::Value::Null,
            timings_ms: BTreeMap::new(),
            clock: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.display().to_string());
    }

    pub fn output(&mut self, name: &str, path: &Path) {
        self.outputs.insert(name.to_string(), path.display().to_string());
    }

    /// Records the time since the previous lap under `stage`.
    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        if let Some(prev) = self.clock.replace(now) {
            self.timings_ms
                .insert(stage.to_string(), (now - prev).as_secs_f64() * 1e3);
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::input(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// `<dir>/<stem>.manifest.json` beside a primary output file.
pub fn beside(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    output.with_file_name(format!("{stem}.manifest.json"))
}

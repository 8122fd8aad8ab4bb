use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::Command;

/// Record of one run. `command` holds every resolved argument, so replaying
/// it reproduces the outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &Command, config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command: command.clone(),
            config,
            seed,
            inputs: vec![],
            outputs: vec![],
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn write(mut self, out_dir: &Path) -> whid::Result<()> {
        let path = out_dir.join("manifest.json");
        self.outputs.push(path.clone());
        whid::io::write_json(&path, &self)
    }
}

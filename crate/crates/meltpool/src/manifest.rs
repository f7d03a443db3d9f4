use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::store::OutputDir;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Written at the root of every output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub arguments: Vec<String>,
    /// `desk`, `convergence` or `custom`.
    pub grid_preset: String,
    pub wall_time_s: f64,
    /// Resolved config; feeding it back to `run` repeats the run exactly.
    /// Absent for commands that take no config.
    pub config: Option<String>,
    /// Every file written, relative to the output root.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, arguments: Vec<String>, grid_preset: &str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            arguments,
            grid_preset: grid_preset.to_string(),
            wall_time_s: 0.0,
            config: None,
            files: Vec::new(),
        }
    }

    /// Lists the files of `out` (plus the manifest itself) and writes it.
    pub fn write(mut self, out: &mut OutputDir) -> Result<Self> {
        let path = out.file(MANIFEST_FILE)?;
        self.files = out.files().to_vec();
        let text = toml::to_string(&self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| crate::error::AppError::io(format!("writing {}", path.display()), e))?;
        Ok(self)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| crate::error::AppError::io(format!("reading {}", path.display()), e))?;
        toml::from_str(&text).map_err(|e| crate::error::AppError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

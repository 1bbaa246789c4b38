use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

/// Run record written next to every output file as `<output>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub subcommand: &'a str,
    pub flags: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: u64,
    pub toolkit_version: &'static str,
    /// Seconds since the Unix epoch. The only field that varies between
    /// identical runs.
    pub created_unix: u64,
}

impl RunManifest<'_> {
    pub fn write_alongside(&self) -> Result<()> {
        let body = serde_json::to_string_pretty(self)? + "\n";
        for out in &self.outputs {
            let path = manifest_path(Path::new(out));
            std::fs::write(&path, &body).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

pub fn manifest_path(output: &Path) -> std::path::PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

/// Record written next to every output: what ran, with which resolved
/// parameters, and where the results went.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub tool_version: &'static str,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub exit_code: u8,
}

pub struct Recorder {
    command: &'static str,
    parameters: Value,
    started: Instant,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn start(command: &'static str, parameters: Value) -> Self {
        Self { command, parameters, started: Instant::now(), outputs: Vec::new() }
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> std::io::Result<()> {
        std::fs::write(path, contents)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    /// Writes `<out>.manifest.json`, or prints the manifest to stderr when
    /// there is no output path.
    pub fn finish(self, out: Option<&Path>, exit_code: u8) -> std::io::Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            parameters: self.parameters,
            tool_version: env!("CARGO_PKG_VERSION"),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            exit_code,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        match out {
            Some(path) => std::fs::write(sibling(path, "manifest.json"), text + "\n"),
            None => {
                eprintln!("{text}");
                Ok(())
            }
        }
    }
}

/// `<path>.<suffix>`, keeping the original file name intact.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

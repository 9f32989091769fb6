//! JSON and `.vqc` files read and written by the commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use vqpulse_core::circuit::Circuit;
use vqpulse_core::pipeline::{CompileMode, CompiledSchedule};
use vqpulse_core::qasm;

use crate::error::{CliError, CliResult};

pub const SCHEDULE_FORMAT: &str = "vqpulse-schedule/1";

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes `text` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp = path.with_file_name(format!(".{name}.{}-{n}.tmp", std::process::id()));
    fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_atomic(path, &text)
}

/// Circuit from a `.vqc` file, named after the file stem.
pub fn read_circuit(path: &Path) -> CliResult<(String, Circuit)> {
    let circuit = qasm::parse(&read_text(path)?).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("circuit")
        .to_string();
    Ok((name, circuit))
}

/// Parses `"0.1, 0.2"` into parameter values.
pub fn parse_params(text: Option<&str>) -> CliResult<Vec<f64>> {
    let Some(text) = text else {
        return Ok(Vec::new());
    };
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad parameter value `{s}`")))
        })
        .collect()
}

/// Output of `compile`: the schedule plus the numbers `report` tabulates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub format: String,
    pub circuit: String,
    pub mode: CompileMode,
    pub params: Vec<f64>,
    pub duration_ns: f64,
    /// Verified end-to-end fidelity; absent above the dense-matrix cap.
    pub fidelity: Option<f64>,
    pub grape_calls: usize,
    pub iterations: usize,
    pub wall_ms: f64,
    pub schedule: CompiledSchedule,
}

/// One generated benchmark circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub kind: String,
    pub nodes: usize,
    pub rounds: usize,
    pub seed: u64,
    pub edges: Vec<(usize, usize)>,
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

/// Adds `entry` to the manifest in `dir`, replacing one with the same file.
pub fn update_manifest(dir: &Path, entry: ManifestEntry) -> CliResult<()> {
    let path = manifest_path(dir);
    let mut entries: Vec<ManifestEntry> = if path.exists() {
        read_json(&path)?
    } else {
        Vec::new()
    };
    entries.retain(|e| e.file != entry.file);
    entries.push(entry);
    entries.sort_by(|a, b| a.file.cmp(&b.file));
    write_json(&path, &entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse() {
        assert_eq!(parse_params(None).unwrap(), Vec::<f64>::new());
        assert_eq!(parse_params(Some("0.1, -2,3e-1")).unwrap(), vec![0.1, -2.0, 0.3]);
        assert!(matches!(parse_params(Some("0.1,x")), Err(CliError::Usage(_))));
    }
}

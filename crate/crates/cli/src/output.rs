//! CSV emission with run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use hiplan::qlearn::QLearnConfig;
use serde_json::{json, Value};

/// Everything needed to re-run the command that produced a CSV.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub layout: String,
    pub csv_schema: String,
    pub schemes: Vec<SchemeParams>,
    pub seeds: Vec<u64>,
    pub parameters: Value,
    pub tool_version: String,
    pub timestamp_unix: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeParams {
    pub name: String,
    pub terminal_reward: f64,
    pub intermediate_reward: Option<f64>,
    pub gamma: f64,
}

impl RunManifest {
    pub fn new(layout: &str, csv_schema: &str) -> Self {
        Self {
            command: std::env::args().collect(),
            layout: layout.to_string(),
            csv_schema: csv_schema.to_string(),
            schemes: Vec::new(),
            seeds: Vec::new(),
            parameters: Value::Null,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    csv.with_file_name(name)
}

/// Writes the CSV body to `out` with a `<out>.manifest.json` sidecar, or to standard
/// output with the manifest on standard error.
pub fn emit_csv(body: &[u8], out: Option<&Path>, manifest: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest)?;
    match out {
        Some(path) => {
            fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
            let side = sidecar_path(path);
            fs::write(&side, json + "\n").with_context(|| format!("writing {}", side.display()))?;
        }
        None => {
            std::io::stdout().write_all(body).context("writing standard output")?;
            eprintln!("{json}");
        }
    }
    Ok(())
}

pub fn q_params(cfg: &QLearnConfig) -> Value {
    json!({
        "learning_rate": cfg.learning_rate,
        "gamma": cfg.gamma,
        "epsilon": cfg.epsilon,
        "max_steps": cfg.max_steps,
    })
}

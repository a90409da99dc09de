//! Reproducibility record written next to every output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub versions: serde_json::Value,
    pub wall_time_secs: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        parameters: serde_json::Value,
        seed: Option<u64>,
        elapsed: Duration,
        outputs: &[PathBuf],
    ) -> Result<Self> {
        let outputs = outputs
            .iter()
            .map(|p| Ok(OutputDigest { path: p.display().to_string(), sha256: sha256_file(p)? }))
            .collect::<Result<_>>()?;
        Ok(Self {
            subcommand: subcommand.to_string(),
            parameters,
            seed,
            versions: serde_json::json!({
                "dmkit": env!("CARGO_PKG_VERSION"),
                "threads": rayon::current_num_threads(),
            }),
            wall_time_secs: elapsed.as_secs_f64(),
            outputs,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// `out.csv` → `out.csv.manifest.json`; a directory gets `manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("manifest.json")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }
}

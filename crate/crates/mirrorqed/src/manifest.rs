//! Append-only run manifests.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::output::Artifact;
use mirrorqed_core::CircuitParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub c_c: f64,
    pub c_j: f64,
    pub l_j: f64,
    pub z_0: f64,
    pub delay: Option<f64>,
}

impl From<&CircuitParams> for ParamRecord {
    fn from(p: &CircuitParams) -> Self {
        Self {
            c_c: p.c_c(),
            c_j: p.c_j(),
            l_j: p.l_j(),
            z_0: p.z_0(),
            delay: p.delay(),
        }
    }
}

/// Everything needed to rerun a command and locate its outputs. Each output
/// is listed with its SHA-256, which ties a file back to the run that made
/// it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    /// Dimensionless parameter sets (ω_J = 1, Z_J = 1).
    pub params: Vec<ParamRecord>,
    /// SI inputs when given, in the same order as `params`.
    pub si: Vec<ParamRecord>,
    pub grids: serde_json::Value,
    pub outputs: Vec<Artifact>,
    pub version: String,
    pub wall_time_s: f64,
}

pub const FILE_NAME: &str = "manifest.jsonl";

/// Appends one JSON line to `<dir>/manifest.jsonl`.
pub fn append(dir: &Path, m: &RunManifest) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(FILE_NAME);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .with_context(|| format!("opening {}", path.display()))?;
    let line = serde_json::to_string(m)?;
    writeln!(f, "{line}")?;
    Ok(())
}

pub fn read_all(dir: &Path) -> Result<Vec<RunManifest>> {
    let text = std::fs::read_to_string(dir.join(FILE_NAME))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

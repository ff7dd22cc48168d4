//! JSON run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::noise::NoiseSpec;
use crate::solver::{SolverConfig, SolverDiagnostics, SolverResult};

/// Everything needed to re-run a denoise and the numbers it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub input: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean: Option<PathBuf>,
    /// Corruption that produced `input`, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    pub solver: SolverConfig,
    /// `L` used for previews and metrics.
    pub dynamic_range: f64,
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preview: Option<PathBuf>,
    pub run: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_rel_change: f64,
    pub wall_time_s: f64,
    pub diagnostics: SolverDiagnostics,
}

impl RunSummary {
    pub fn from_result(result: &SolverResult) -> Self {
        Self {
            iterations: result.iterations,
            converged: result.converged,
            final_rel_change: result.rel_change_history.last().copied().unwrap_or(f64::NAN),
            wall_time_s: result.wall_time.as_secs_f64(),
            diagnostics: result.diagnostics,
        }
    }
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

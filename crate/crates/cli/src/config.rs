use std::path::{Path, PathBuf};

use frachardy::NumericConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable naming a JSON run configuration.
pub const CONFIG_ENV: &str = "FRACHARDY_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rel_tol: f64,
    /// Element count of meshes built when a subcommand gets no `--mesh-n`.
    pub mesh_elements: usize,
    pub grading_ratio: f64,
    pub seed: u64,
    /// Relative output paths are resolved against this directory.
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { rel_tol: 1e-8, mesh_elements: 512, grading_ratio: 0.5, seed: 0, output_dir: None, workers: None }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(CliError::param("rel_tol", format!("{} not in (0, 1e-2]", self.rel_tol)));
        }
        if !(self.grading_ratio > 0.0 && self.grading_ratio < 1.0) {
            return Err(CliError::param("grading_ratio", format!("{} not in (0, 1)", self.grading_ratio)));
        }
        if self.mesh_elements < 4 || !self.mesh_elements.is_multiple_of(2) {
            return Err(CliError::param("mesh_elements", format!("{}: need an even count >= 4", self.mesh_elements)));
        }
        if self.workers == Some(0) {
            return Err(CliError::param("workers", "must be positive"));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::param("FRACHARDY_CONFIG", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The file named by `FRACHARDY_CONFIG`, or defaults.
    pub fn from_env() -> CliResult<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }

    pub fn numeric(&self) -> NumericConfig {
        NumericConfig { rel_tol: self.rel_tol, grading_ratio: self.grading_ratio, ..NumericConfig::default() }
    }

    pub fn resolve(&self, out: &Path) -> PathBuf {
        match &self.output_dir {
            Some(dir) if out.is_relative() => dir.join(out),
            _ => out.to_path_buf(),
        }
    }
}

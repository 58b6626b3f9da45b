use std::path::{Path, PathBuf};

use serde::Serialize;
use sheetflat_core::{Algorithm, MMConfig};

use crate::synthetic::SyntheticKind;

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_RESOLUTION: f64 = 50.0;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("no input meshes given (pass mesh files or --synthetic)")]
    NoInputs,
    #[error("no algorithms selected")]
    NoAlgorithms,
    #[error("algorithm {0} requested more than once")]
    DuplicateAlgorithm(Algorithm),
    #[error("resolution must be a positive number of pixels per UV unit, got {0}")]
    Resolution(f64),
    #[error("synthetic meshes need n >= 2, got {0}")]
    SyntheticSize(usize),
    #[error("--dump-trajectory needs a positive step interval")]
    TrajectoryInterval,
    #[error("cannot read MM config {path}: {message}")]
    MmConfigFile { path: PathBuf, message: String },
    #[error(transparent)]
    Mm(#[from] sheetflat_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshSource {
    File { path: PathBuf },
    Synthetic { generator: SyntheticKind, n: usize },
}

impl MeshSource {
    pub fn default_name(&self) -> String {
        match self {
            MeshSource::File { path } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "mesh".into()),
            MeshSource::Synthetic { generator, n } => format!("{generator}_{n}"),
        }
    }
}

/// Per-face quantity drawn as a heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMetric {
    /// Mean weighted angular error of the face's corners.
    Angular,
    /// Relative area error E(t).
    Area,
    /// Per-face L² stretch.
    Stretch,
}

impl HeatmapMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            HeatmapMetric::Angular => "angular",
            HeatmapMetric::Area => "area",
            HeatmapMetric::Stretch => "stretch",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<MeshSource>,
    pub algorithms: Vec<Algorithm>,
    pub mm: MMConfig,
    pub out_dir: PathBuf,
    /// Pixels per UV unit.
    pub resolution: f64,
    pub heatmaps: Vec<HeatmapMetric>,
    /// Write an OBJ snapshot of the spring system every this many steps.
    pub dump_trajectory: Option<u64>,
    pub format_version: u32,
}

impl RunConfig {
    pub fn new(inputs: Vec<MeshSource>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            inputs,
            algorithms: Algorithm::ALL.to_vec(),
            mm: MMConfig::default(),
            out_dir: out_dir.into(),
            resolution: DEFAULT_RESOLUTION,
            heatmaps: vec![HeatmapMetric::Angular, HeatmapMetric::Area],
            dump_trajectory: None,
            format_version: REPORT_FORMAT_VERSION,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.inputs.is_empty() {
            return Err(ConfigError::NoInputs);
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::NoAlgorithms);
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(ConfigError::DuplicateAlgorithm(*a));
            }
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(ConfigError::Resolution(self.resolution));
        }
        for input in &self.inputs {
            if let MeshSource::Synthetic { n, .. } = input {
                if *n < 2 {
                    return Err(ConfigError::SyntheticSize(*n));
                }
            }
        }
        if self.dump_trajectory == Some(0) {
            return Err(ConfigError::TrajectoryInterval);
        }
        self.mm.validate()?;
        Ok(())
    }
}

/// Reads an [`MMConfig`] from TOML; absent fields keep their defaults.
pub fn load_mm_config(path: &Path) -> Result<MMConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::MmConfigFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::MmConfigFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

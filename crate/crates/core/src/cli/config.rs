//! TOML experiment configuration. Every field has a default, so an empty
//! file (or no file) reproduces the reference experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, ForestParams, SvmParams};
use crate::dwt::BoundaryMode;
use crate::error::{PqError, Result};
use crate::features::FEATURE_LEVEL;
use crate::signal_gen::DatasetSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwtConfig {
    pub levels: usize,
    pub boundary: BoundaryMode,
}

impl Default for DwtConfig {
    fn default() -> Self {
        DwtConfig { levels: 3, boundary: BoundaryMode::Periodic }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_per_class: 600, test_per_class: 100, seed: 1159 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 1 }
    }
}

/// When to grid-search C × gamma on a validation slice of the training rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneMode {
    Off,
    /// Only after the default parameters score below the SVM accuracy floor.
    OnFloorMiss,
    Always,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: f64,
    pub tolerance: f64,
    pub max_passes: usize,
    pub tune: TuneMode,
    pub validation_per_class: usize,
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        let p = SvmParams::default();
        SvmConfig {
            c: p.c,
            gamma: p.gamma,
            tolerance: p.tolerance,
            max_passes: p.max_passes,
            tune: TuneMode::OnFloorMiss,
            validation_per_class: 100,
            c_grid: vec![0.1, 1.0, 10.0, 100.0],
            gamma_grid: vec![0.05, 0.2, 1.0, 5.0],
        }
    }
}

impl SvmConfig {
    pub fn params(&self) -> SvmParams {
        SvmParams {
            c: self.c,
            gamma: self.gamma,
            tolerance: self.tolerance,
            max_passes: self.max_passes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("pqwf-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub dwt: DwtConfig,
    pub split: SplitConfig,
    pub classifiers: Classifiers,
    pub knn: KnnConfig,
    pub svm: SvmConfig,
    pub forest: ForestParams,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Classifiers {
    pub enabled: Vec<ClassifierKind>,
}

impl Default for Classifiers {
    fn default() -> Self {
        Classifiers { enabled: ClassifierKind::ALL.to_vec() }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| PqError::Parse {
            line: e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1) as u64)
                .unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PqError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        if self.dwt.levels < FEATURE_LEVEL {
            return Err(PqError::Parameter(format!(
                "features use detail level {FEATURE_LEVEL}; dwt.levels = {} is too shallow",
                self.dwt.levels
            )));
        }
        let n = (self.dataset.cycles as f64 * self.dataset.sampling_hz / self.dataset.fundamental_hz).round() as usize;
        if !n.is_multiple_of(1usize << self.dwt.levels) {
            return Err(PqError::Parameter(format!(
                "record length {n} is not divisible by 2^{}",
                self.dwt.levels
            )));
        }
        if self.split.train_per_class == 0 || self.split.test_per_class == 0 {
            return Err(PqError::Parameter("split counts must be positive".into()));
        }
        if self.classifiers.enabled.is_empty() {
            return Err(PqError::Parameter("no classifiers enabled".into()));
        }
        if self.knn.k == 0 || self.knn.k.is_multiple_of(2) {
            return Err(PqError::Parameter(format!("knn.k must be odd, got {}", self.knn.k)));
        }
        if self.svm.tune == TuneMode::Always && self.svm.validation_per_class >= self.split.train_per_class {
            return Err(PqError::Parameter(
                "svm.validation_per_class must be smaller than split.train_per_class".into(),
            ));
        }
        Ok(())
    }
}

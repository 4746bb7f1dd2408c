//! TOML configuration with command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use ladder_core::eval::CvConfig;
use ladder_core::learners::{GbtHyper, GpHyper, LearnerConfig};
use ladder_core::rq::{BitrateGrid, ResolutionSet};
use ladder_core::video::GlcmConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("config schema_version {0} is not supported (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("bad resolution {0:?}, expected WIDTHxHEIGHT")]
    BadResolution(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub min_bps: f64,
    pub max_bps: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            min_bps: 64.0,
            max_bps: 65536.0,
            points: 100,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregatorSection {
    pub fast: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    pub workdir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for EncoderSection {
    fn default() -> Self {
        Self {
            template: None,
            workdir: PathBuf::from("ladder-work"),
            cache_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossvalSection {
    pub folds: usize,
    /// Size of the synthetic dataset.
    pub sequences: usize,
}

impl Default for CrossvalSection {
    fn default() -> Self {
        Self {
            folds: 10,
            sequences: 100,
        }
    }
}

/// Everything a subcommand may need. Every field has a default, so an empty
/// file is a valid config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub schema_version: u32,
    /// Drives every random choice (boosting subsamples, folds, synthetic data).
    pub seed: u64,
    /// `[width, height]` pairs.
    pub resolutions: Vec<[u32; 2]>,
    pub grid: GridConfig,
    /// Features kept by recursive elimination; 9 keeps all.
    pub rfe_target_k: usize,
    pub glcm: GlcmConfig,
    pub gbt: GbtHyper,
    pub gp: GpHyper,
    pub aggregator: AggregatorSection,
    pub encoder: EncoderSection,
    pub crossval: CrossvalSection,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 2024,
            resolutions: vec![[960, 540], [1280, 720], [1920, 1080], [3840, 2160]],
            grid: GridConfig::default(),
            rfe_target_k: 6,
            glcm: GlcmConfig::default(),
            gbt: GbtHyper::default(),
            gp: GpHyper::default(),
            aggregator: AggregatorSection::default(),
            encoder: EncoderSection::default(),
            crossval: CrossvalSection::default(),
        }
    }
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Version(cfg.schema_version));
        }
        Ok(cfg)
    }

    pub fn resolution_set(&self) -> Result<ResolutionSet, ConfigError> {
        let dims: Vec<(u32, u32)> = self.resolutions.iter().map(|r| (r[0], r[1])).collect();
        ResolutionSet::from_dims(&dims).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn grid(&self) -> Result<BitrateGrid, ConfigError> {
        BitrateGrid::from_bps(self.grid.min_bps, self.grid.max_bps, self.grid.points)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn learner_config(&self) -> Result<LearnerConfig, ConfigError> {
        Ok(LearnerConfig {
            grid: self.grid()?,
            gbt: GbtHyper {
                seed: self.seed,
                ..self.gbt.clone()
            },
            gp: self.gp.clone(),
        })
    }

    pub fn cv_config(&self) -> Result<CvConfig, ConfigError> {
        Ok(CvConfig {
            folds: self.crossval.folds,
            seed: self.seed,
            rfe_target_k: self.rfe_target_k,
            learner: self.learner_config()?,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn parse_resolutions(s: &str) -> Result<Vec<[u32; 2]>, ConfigError> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            let (w, h) = item
                .split_once(['x', 'X'])
                .ok_or_else(|| ConfigError::BadResolution(item.to_string()))?;
            let w = w.parse().map_err(|_| ConfigError::BadResolution(item.to_string()))?;
            let h = h.parse().map_err(|_| ConfigError::BadResolution(item.to_string()))?;
            Ok([w, h])
        })
        .collect()
}

/// Flags that take precedence over the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Seed for every random choice
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated WIDTHxHEIGHT list
    #[arg(long, global = true, value_name = "LIST")]
    pub resolutions: Option<String>,
    /// Lowest grid bitrate in bits/s
    #[arg(long, global = true, value_name = "BPS")]
    pub grid_min_bps: Option<f64>,
    /// Highest grid bitrate in bits/s
    #[arg(long, global = true, value_name = "BPS")]
    pub grid_max_bps: Option<f64>,
    /// Number of log-spaced grid points
    #[arg(long, global = true, value_name = "N")]
    pub grid_points: Option<usize>,
    /// GLCM quantization levels
    #[arg(long, global = true, value_name = "N")]
    pub gray_levels: Option<usize>,
    /// GLCM pixel distance
    #[arg(long, global = true, value_name = "N")]
    pub glcm_distance: Option<usize>,
    /// Boosting rounds
    #[arg(long, global = true, value_name = "N")]
    pub gbt_rounds: Option<usize>,
    /// Maximum tree depth
    #[arg(long, global = true, value_name = "N")]
    pub gbt_depth: Option<usize>,
    /// Boosting learning rate
    #[arg(long, global = true, value_name = "RATE")]
    pub gbt_learning_rate: Option<f64>,
    /// Encoder command template
    #[arg(long, global = true, value_name = "CMD")]
    pub encoder_template: Option<String>,
    /// Directory for encoder scratch files
    #[arg(long, global = true, value_name = "DIR")]
    pub encoder_workdir: Option<PathBuf>,
    /// Directory for cached encode results
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Cross-validation folds
    #[arg(long, global = true, value_name = "N")]
    pub folds: Option<usize>,
    /// Features kept by recursive elimination
    #[arg(long, global = true, value_name = "K")]
    pub rfe_k: Option<usize>,
    /// Synthetic sequence count
    #[arg(long, global = true, value_name = "N")]
    pub sequences: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut AppConfig) -> Result<(), ConfigError> {
        fn set<T: Clone>(dst: &mut T, src: &Option<T>) {
            if let Some(v) = src {
                *dst = v.clone();
            }
        }
        set(&mut cfg.seed, &self.seed);
        if let Some(r) = &self.resolutions {
            cfg.resolutions = parse_resolutions(r)?;
        }
        set(&mut cfg.grid.min_bps, &self.grid_min_bps);
        set(&mut cfg.grid.max_bps, &self.grid_max_bps);
        set(&mut cfg.grid.points, &self.grid_points);
        set(&mut cfg.glcm.gray_levels, &self.gray_levels);
        set(&mut cfg.glcm.distance, &self.glcm_distance);
        set(&mut cfg.gbt.rounds, &self.gbt_rounds);
        set(&mut cfg.gbt.max_depth, &self.gbt_depth);
        set(&mut cfg.gbt.learning_rate, &self.gbt_learning_rate);
        if self.encoder_template.is_some() {
            cfg.encoder.template = self.encoder_template.clone();
        }
        set(&mut cfg.encoder.workdir, &self.encoder_workdir);
        if self.cache_dir.is_some() {
            cfg.encoder.cache_dir = self.cache_dir.clone();
        }
        set(&mut cfg.crossval.folds, &self.folds);
        set(&mut cfg.rfe_target_k, &self.rfe_k);
        set(&mut cfg.crossval.sequences, &self.sequences);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let cfg: AppConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, AppConfig::default());
        assert_eq!(cfg.grid().unwrap(), BitrateGrid::default());
    }

    #[test]
    fn round_trip_and_overrides() {
        let mut cfg = AppConfig::default();
        let o = Overrides {
            seed: Some(7),
            resolutions: Some("640x360, 1280x720".into()),
            gbt_rounds: Some(3),
            ..Overrides::default()
        };
        o.apply(&mut cfg).unwrap();
        assert_eq!(cfg.resolutions, vec![[640, 360], [1280, 720]]);
        let back: AppConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.learner_config().unwrap().gbt.seed, 7);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_dims() {
        assert!(toml::from_str::<AppConfig>("colour = 1").is_err());
        assert!(parse_resolutions("1920by1080").is_err());
    }
}

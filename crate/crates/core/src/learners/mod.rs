//! The two constituent ladder predictors and their training pipelines.
//!
//! * [`gbt`]: multi-class gradient-boosted trees mapping
//!   `(features, log2 rate)` to a resolution index.
//! * [`gp`]: one Gaussian-process regressor per resolution boundary mapping
//!   features to a cross-over log2 rate.
//! * [`rfe`]: recursive feature elimination driven by either learner.

pub mod gbt;
pub mod gp;
pub mod model_file;
pub mod rfe;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rq::{BitrateGrid, BitrateLadder};
use crate::video::{FeatureVector, FEATURE_COUNT};

pub use gbt::{classifier_ladder, predict_class, train_classifier, ClassifierModel, GbtHyper};
pub use gp::{
    predict_crossover, regressor_ladder, train_regressor, GpHyper, GpKernelParams, LogGrid, RegressorModel,
};
pub use model_file::{ModelFile, ModelKind, MODEL_FILE_VERSION};
pub use rfe::{rfe_path, rfe_select, LearnerKind};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("training labels contain a single class only")]
    DegenerateLabels,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("kernel matrix is not positive definite after jitter")]
    SingularKernel,
    #[error("boundary index {0} is out of range")]
    BadBoundaryIndex(usize),
    #[error("training samples use different resolution sets")]
    MixedResolutionSets,
    #[error("feature mask has {got} entries, expected {expected}")]
    MaskMismatch { expected: usize, got: usize },
    #[error("feature mask selects no features")]
    EmptyMask,
    #[error("target feature count {target} must be in 1..={available}")]
    BadTargetK { target: usize, available: usize },
    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("model file holds a {found} model, expected {expected}")]
    WrongKind { found: String, expected: String },
    #[error("invalid hyperparameters: {0}")]
    BadHyper(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = LearnError> = std::result::Result<T, E>;

/// One training chunk: content features plus its ground-truth ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub chunk_id: String,
    pub features: FeatureVector,
    pub gt_ladder: BitrateLadder,
}

/// Which entries of a [`FeatureVector`] a model consumes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureMask(Vec<bool>);

impl FeatureMask {
    pub fn all() -> Self {
        Self(vec![true; FEATURE_COUNT])
    }

    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.len() != FEATURE_COUNT {
            return Err(LearnError::MaskMismatch {
                expected: FEATURE_COUNT,
                got: bits.len(),
            });
        }
        if !bits.iter().any(|&b| b) {
            return Err(LearnError::EmptyMask);
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.0.get(feature).copied().unwrap_or(false)
    }

    /// Indices of the selected features, ascending.
    pub fn selected(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i]).collect()
    }

    pub fn without(&self, feature: usize) -> Self {
        let mut bits = self.0.clone();
        bits[feature] = false;
        Self(bits)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }

    pub fn apply(&self, features: &FeatureVector) -> Vec<f64> {
        let a = features.to_array();
        self.selected().into_iter().map(|i| a[i]).collect()
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.0.clone()).map(|_| ())
    }
}

/// Per-dimension affine standardization fitted on training data only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population statistics; constant columns keep scale 1.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let std = (0..d)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                let s = var.sqrt();
                if s > 1e-12 * (1.0 + mean[j].abs()) {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Settings shared by both training pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub grid: BitrateGrid,
    pub gbt: GbtHyper,
    pub gp: GpHyper,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            grid: BitrateGrid::default(),
            gbt: GbtHyper::default(),
            gp: GpHyper::default(),
        }
    }
}

fn check_resolution_sets(samples: &[TrainingSample]) -> Result<()> {
    if let Some(first) = samples.first() {
        let set = first.gt_ladder.resolutions();
        if samples.iter().any(|s| s.gt_ladder.resolutions() != set) {
            return Err(LearnError::MixedResolutionSets);
        }
    }
    Ok(())
}

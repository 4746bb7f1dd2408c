//! Versioned JSON persistence for trained models.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gp::BoundaryGp;
use super::tree::RegressionTree;
use super::{ClassifierModel, FeatureMask, LearnError, RegressorModel, Result, Standardizer};
use crate::rq::ResolutionSet;

pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Classifier,
    Regressor,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            Self::Classifier => "classifier",
            Self::Regressor => "regressor",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub kind: ModelKind,
    pub feature_mask: FeatureMask,
    pub standardization: Standardizer,
    pub payload: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct ClassifierPayload {
    resolutions: ResolutionSet,
    learning_rate: f64,
    base_scores: Vec<f64>,
    trees: Vec<Vec<RegressionTree>>,
    importance: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RegressorPayload {
    resolutions: ResolutionSet,
    inputs: Vec<Vec<f64>>,
    gps: Vec<BoundaryGp>,
    rate_bounds: (f64, f64),
}

impl ModelFile {
    pub fn from_classifier(m: &ClassifierModel) -> Result<Self> {
        let payload = ClassifierPayload {
            resolutions: m.resolutions.clone(),
            learning_rate: m.learning_rate,
            base_scores: m.base_scores.clone(),
            trees: m.trees.clone(),
            importance: m.importance.clone(),
        };
        Ok(Self {
            version: MODEL_FILE_VERSION,
            kind: ModelKind::Classifier,
            feature_mask: m.feature_mask.clone(),
            standardization: m.standardization.clone(),
            payload: serde_json::to_value(payload)?,
        })
    }

    pub fn from_regressor(m: &RegressorModel) -> Result<Self> {
        let payload = RegressorPayload {
            resolutions: m.resolutions.clone(),
            inputs: m.inputs.clone(),
            gps: m.gps.clone(),
            rate_bounds: m.rate_bounds,
        };
        Ok(Self {
            version: MODEL_FILE_VERSION,
            kind: ModelKind::Regressor,
            feature_mask: m.feature_mask.clone(),
            standardization: m.standardization.clone(),
            payload: serde_json::to_value(payload)?,
        })
    }

    fn expect(&self, kind: ModelKind) -> Result<()> {
        if self.version != MODEL_FILE_VERSION {
            return Err(LearnError::VersionMismatch {
                found: self.version,
                expected: MODEL_FILE_VERSION,
            });
        }
        if self.kind != kind {
            return Err(LearnError::WrongKind {
                found: self.kind.name().into(),
                expected: kind.name().into(),
            });
        }
        self.feature_mask.validate()
    }

    pub fn into_classifier(self) -> Result<ClassifierModel> {
        self.expect(ModelKind::Classifier)?;
        let p: ClassifierPayload = serde_json::from_value(self.payload)?;
        let k = p.resolutions.len();
        if p.base_scores.len() != k || p.trees.len() != k {
            return Err(LearnError::BadHyper("class count does not match resolutions".into()));
        }
        Ok(ClassifierModel {
            resolutions: p.resolutions,
            feature_mask: self.feature_mask,
            standardization: self.standardization,
            learning_rate: p.learning_rate,
            base_scores: p.base_scores,
            trees: p.trees,
            importance: p.importance,
        })
    }

    pub fn into_regressor(self) -> Result<RegressorModel> {
        self.expect(ModelKind::Regressor)?;
        let p: RegressorPayload = serde_json::from_value(self.payload)?;
        if p.gps.len() + 1 != p.resolutions.len() || p.gps.iter().any(|g| g.alpha.len() != p.inputs.len()) {
            return Err(LearnError::BadHyper("regressor payload is inconsistent".into()));
        }
        Ok(RegressorModel {
            resolutions: p.resolutions,
            feature_mask: self.feature_mask,
            standardization: self.standardization,
            inputs: p.inputs,
            gps: p.gps,
            rate_bounds: p.rate_bounds,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let s = self.to_json().map_err(std::io::Error::other)?;
        std::fs::write(path, s)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json(&s).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

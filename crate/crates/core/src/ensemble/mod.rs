//! Encoder backends and the conditional aggregator that merges the
//! classifier and regressor ladders.

mod aggregate;
mod backends;
pub mod external;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use thiserror::Error;

use crate::rq::{Resolution, ResolutionSet};

pub use aggregate::{aggregate, AggregateError, AggregationReport, AggregatorConfig, PartialReport, PointRecord};
pub use backends::{make_synthetic_backend, SyntheticBackend, SyntheticParams, TableBackend};
pub use external::{make_external_backend, ExternalBackend, ExternalConfig};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("resolution {0} is not supported by this backend")]
    UnsupportedResolution(String),
    #[error("log2 rate {rate} outside backend range [{min}, {max}]")]
    RateOutOfRange { rate: f64, min: f64, max: f64 },
    #[error("encoder exited with {status}: {output}")]
    EncoderFailure { status: String, output: String },
    #[error("cache record {0} is corrupt")]
    CacheCorruption(PathBuf),
    #[error("invalid synthetic parameters: {0}")]
    BadParams(String),
    #[error("invalid encoder template: {0}")]
    BadTemplate(String),
    #[error("chunk {0} has no source video")]
    MissingSource(String),
    #[error("quality for chunk {0} is not finite")]
    NonFiniteQuality(String),
    #[error(transparent)]
    Video(#[from] crate::video::VideoError),
    #[error(transparent)]
    Eval(Box<crate::eval::EvalError>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EncodeError> = std::result::Result<T, E>;

/// Identifies the content being encoded; `source` is needed by backends that
/// actually read video.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChunkRef {
    pub id: String,
    pub source: Option<PathBuf>,
}

impl ChunkRef {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            source: None,
        }
    }

    pub fn with_source(id: impl Into<String>, source: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            source: Some(source.into()),
        }
    }
}

/// What a backend can encode.
#[derive(Clone, Debug, PartialEq)]
pub struct Capability {
    pub resolutions: ResolutionSet,
    pub min_log2_rate: f64,
    pub max_log2_rate: f64,
}

impl Capability {
    pub fn check(&self, log2_rate: f64, resolution: &Resolution) -> Result<()> {
        if self.resolutions.get(resolution.index) != Some(resolution) {
            return Err(EncodeError::UnsupportedResolution(resolution.label.clone()));
        }
        if !(log2_rate >= self.min_log2_rate && log2_rate <= self.max_log2_rate) {
            return Err(EncodeError::RateOutOfRange {
                rate: log2_rate,
                min: self.min_log2_rate,
                max: self.max_log2_rate,
            });
        }
        Ok(())
    }
}

/// `q = E(v, r, s)`: quality of chunk `v` encoded at rate `r` and resolution
/// `s`. Repeated identical queries return identical values.
pub trait EncoderBackend: Send + Sync {
    fn capability(&self) -> &Capability;

    fn encode_quality(&self, chunk: &ChunkRef, log2_rate: f64, resolution: &Resolution) -> Result<f64>;
}

/// In-memory memo keyed by `(chunk, rate bits, resolution index)`.
#[derive(Debug, Default)]
pub(crate) struct Memo {
    map: Mutex<HashMap<(String, u64, usize), f64>>,
}

impl Memo {
    pub fn get_or_try(
        &self,
        chunk: &ChunkRef,
        log2_rate: f64,
        resolution: &Resolution,
        compute: impl FnOnce() -> Result<f64>,
    ) -> Result<f64> {
        let key = (chunk.id.clone(), log2_rate.to_bits(), resolution.index);
        if let Some(&q) = self.map.lock().expect("memo lock").get(&key) {
            return Ok(q);
        }
        // computed outside the lock; concurrent duplicates agree
        let q = compute()?;
        if !q.is_finite() {
            return Err(EncodeError::NonFiniteQuality(chunk.id.clone()));
        }
        self.map.lock().expect("memo lock").insert(key, q);
        Ok(q)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("memo lock").len()
    }
}

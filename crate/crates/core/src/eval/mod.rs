//! BD-BR, ladder accuracy, scaled PSNR, the synthetic dataset and the
//! cross-validation study.

mod bdbr;
mod cv;
mod ladder_eval;
mod psnr;
mod resample;
mod synth;

use thiserror::Error;

pub use bdbr::{bd_br, BdBrResult};
pub use cv::{
    cross_validate, write_cv_csv, write_sequence_csv, CvConfig, CvReport, FoldReport, Method, MethodMetrics,
    SequenceResult,
};
pub use ladder_eval::{ladder_accuracy, ladder_rq_points};
pub use psnr::{scaled_psnr, PSNR_CAP_DB};
pub use resample::{lanczos_resize, resize_chunk, resize_plane};
pub use synth::{generate_synthetic_dataset, DatasetEntry, SyntheticDatasetSpec};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("quality ranges do not overlap: reference {reference:?}, test {test:?}")]
    NoOverlap { reference: (f64, f64), test: (f64, f64) },
    #[error("need at least 2 distinct operating points, got {0}")]
    TooFewPoints(usize),
    #[error("resize target {width}x{height} must be positive and even")]
    BadTarget { width: usize, height: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("ladders use different resolution sets")]
    MixedResolutionSets,
    #[error("dataset of {size} sequences cannot fill {folds} folds")]
    DatasetTooSmall { size: usize, folds: usize },
    #[error("sequence {chunk}: {source}")]
    Sequence {
        chunk: String,
        #[source]
        source: Box<EvalError>,
    },
    #[error(transparent)]
    Encode(#[from] crate::ensemble::EncodeError),
    #[error(transparent)]
    Aggregate(#[from] crate::ensemble::AggregateError),
    #[error(transparent)]
    Learn(#[from] crate::learners::LearnError),
    #[error(transparent)]
    Rq(#[from] crate::rq::RqError),
    #[error(transparent)]
    Video(#[from] crate::video::VideoError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

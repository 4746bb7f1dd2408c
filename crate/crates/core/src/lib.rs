//! Content-adaptive bitrate ladders.
//!
//! Ground-truth ladders are built from rate–quality measurements
//! ([`rq`]), predicted from content features ([`video`]) by a boosted-tree
//! classifier and Gaussian-process cross-over regressors ([`learners`]), and
//! reconciled by a conditional ensemble aggregator that spends encodes only
//! where the two predictions disagree ([`ensemble`]). [`eval`] holds the
//! BD-BR/accuracy harness, scaled PSNR, and the synthetic cross-validation
//! study.

pub mod rq;
pub mod ensemble;
pub mod eval;
pub mod learners;
pub mod video;

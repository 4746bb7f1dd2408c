use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChunkRef, EncodeError, EncoderBackend};
use crate::rq::{ladder_from_indices, BitrateGrid, BitrateLadder};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatorConfig {
    /// Encode only the two predicted resolutions on disagreement.
    pub is_fast: bool,
    pub grid: BitrateGrid,
}

/// What happened at one grid rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub log2_rate: f64,
    pub classifier_index: usize,
    pub regressor_index: usize,
    pub agreed: bool,
    pub encodes: usize,
    /// `(resolution index, quality)` for every encode at this rate.
    pub encoded: Vec<(usize, f64)>,
    pub chosen_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationReport {
    pub ladder: BitrateLadder,
    pub fast: bool,
    pub points: Vec<PointRecord>,
    pub total_encodes: usize,
}

impl AggregationReport {
    pub fn disagreements(&self) -> usize {
        self.points.iter().filter(|p| !p.agreed).count()
    }
}

/// Points completed before a backend failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialReport {
    pub points: Vec<PointRecord>,
    pub total_encodes: usize,
}

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("constituent ladders use different resolution sets")]
    MixedResolutionSets,
    #[error("backend failed at log2 rate {log2_rate} after {} complete points: {source}", partial.points.len())]
    Backend {
        log2_rate: f64,
        partial: Box<PartialReport>,
        #[source]
        source: EncodeError,
    },
}

fn resolve_point(
    x: f64,
    cl: usize,
    rg: usize,
    backend: &dyn EncoderBackend,
    chunk: &ChunkRef,
    fast: bool,
    n: usize,
) -> Result<PointRecord, EncodeError> {
    if cl == rg {
        return Ok(PointRecord {
            log2_rate: x,
            classifier_index: cl,
            regressor_index: rg,
            agreed: true,
            encodes: 0,
            encoded: Vec::new(),
            chosen_index: cl,
        });
    }
    let candidates: Vec<usize> = if fast {
        vec![cl.min(rg), cl.max(rg)]
    } else {
        (1..=n).collect()
    };
    let set = &backend.capability().resolutions;
    let mut encoded = Vec::with_capacity(candidates.len());
    for i in candidates {
        let res = set
            .get(i)
            .ok_or_else(|| EncodeError::UnsupportedResolution(format!("index {i}")))?;
        encoded.push((i, backend.encode_quality(chunk, x, res)?));
    }
    // ascending candidates with strict comparison: ties keep the lower index
    let mut best = encoded[0];
    for &c in &encoded[1..] {
        if c.1 > best.1 {
            best = c;
        }
    }
    Ok(PointRecord {
        log2_rate: x,
        classifier_index: cl,
        regressor_index: rg,
        agreed: false,
        encodes: encoded.len(),
        encoded,
        chosen_index: best.0,
    })
}

/// Merges the two constituent ladders grid point by grid point, spending
/// encodes only where they disagree, then repairs the index sequence into a
/// monotone ladder.
pub fn aggregate(
    ladder_cl: &BitrateLadder,
    ladder_rg: &BitrateLadder,
    backend: &dyn EncoderBackend,
    chunk: &ChunkRef,
    cfg: &AggregatorConfig,
) -> Result<AggregationReport, AggregateError> {
    let set = ladder_cl.resolutions();
    if ladder_rg.resolutions() != set {
        return Err(AggregateError::MixedResolutionSets);
    }
    let rates = cfg.grid.values();
    let results: Vec<Result<PointRecord, EncodeError>> = rates
        .par_iter()
        .map(|&x| {
            resolve_point(
                x,
                ladder_cl.lookup(x),
                ladder_rg.lookup(x),
                backend,
                chunk,
                cfg.is_fast,
                set.len(),
            )
        })
        .collect();

    let mut points = Vec::with_capacity(rates.len());
    for (x, r) in rates.iter().zip(results) {
        match r {
            Ok(p) => points.push(p),
            Err(source) => {
                let total_encodes = points.iter().map(|p: &PointRecord| p.encodes).sum();
                return Err(AggregateError::Backend {
                    log2_rate: *x,
                    partial: Box::new(PartialReport { points, total_encodes }),
                    source,
                });
            }
        }
    }
    let indices: Vec<usize> = points.iter().map(|p| p.chosen_index).collect();
    let ladder = ladder_from_indices(set, &cfg.grid, &indices);
    let total_encodes = points.iter().map(|p| p.encodes).sum();
    Ok(AggregationReport {
        ladder,
        fast: cfg.is_fast,
        points,
        total_encodes,
    })
}

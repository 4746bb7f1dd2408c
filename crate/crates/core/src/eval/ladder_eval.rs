use super::{EvalError, Result};
use crate::ensemble::{ChunkRef, EncodeError, EncoderBackend};
use crate::rq::{BitrateGrid, BitrateLadder, RqPoint};

/// Backend quality at every grid rate, encoded at the ladder's resolution.
pub fn ladder_rq_points(
    ladder: &BitrateLadder,
    backend: &dyn EncoderBackend,
    chunk: &ChunkRef,
    grid: &BitrateGrid,
) -> std::result::Result<Vec<RqPoint>, EncodeError> {
    grid.values()
        .into_iter()
        .map(|x| {
            let res = ladder
                .resolutions()
                .get(ladder.lookup(x))
                .expect("lookup stays within the set");
            Ok(RqPoint::new(x, backend.encode_quality(chunk, x, res)?))
        })
        .collect()
}

/// Fraction of grid rates at which both ladders pick the same resolution.
pub fn ladder_accuracy(predicted: &BitrateLadder, gt: &BitrateLadder, grid: &BitrateGrid) -> Result<f64> {
    if predicted.resolutions() != gt.resolutions() {
        return Err(EvalError::MixedResolutionSets);
    }
    let values = grid.values();
    let hits = values
        .iter()
        .filter(|&&x| predicted.lookup(x) == gt.lookup(x))
        .count();
    Ok(hits as f64 / values.len() as f64)
}

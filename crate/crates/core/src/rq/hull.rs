use super::{BitrateGrid, BitrateLadder, RateQualitySurface, ResolutionSet, Result, RqError};

/// Best achievable quality at `log2_rate` and the resolution achieving it.
///
/// Only curves with an operating point at or below the rate compete (a
/// resolution cannot be encoded below its lowest measured rate). Below every
/// curve the earliest-starting curves compete on their first point. Ties go
/// to the lower resolution index.
pub fn hull_quality(surface: &RateQualitySurface, log2_rate: f64) -> (f64, usize) {
    let curves = surface.curves();
    let earliest = curves
        .iter()
        .map(|c| c.min_log2_rate())
        .fold(f64::INFINITY, f64::min);
    let floor = if log2_rate >= earliest { log2_rate } else { earliest };
    let mut best = (f64::NEG_INFINITY, 0);
    for c in curves.iter().filter(|c| c.covers(floor)) {
        let q = c.interp_quality(log2_rate);
        if q > best.0 {
            best = (q, c.resolution().index);
        }
    }
    best
}

/// Hull argmax index at every grid point.
pub fn hull_argmax_indices(surface: &RateQualitySurface, grid: &BitrateGrid) -> Vec<usize> {
    grid.values()
        .into_iter()
        .map(|x| hull_quality(surface, x).1)
        .collect()
}

/// Cross-over log2 rates of the surface's convex hull sampled on `grid`.
pub fn cross_over_bitrates(surface: &RateQualitySurface, grid: &BitrateGrid) -> BitrateLadder {
    let indices = hull_argmax_indices(surface, grid);
    ladder_from_indices(surface.resolutions(), grid, &indices)
}

/// Turns a per-grid-point resolution index sequence into a valid ladder.
///
/// Boundary `i` is the last grid rate whose index is `<= i`; when there is
/// none it collapses to MinRate. This is an isotonic repair: the result is
/// non-decreasing for any input sequence and reproduces monotone sequences
/// exactly under [`BitrateLadder::lookup`].
pub fn ladder_from_indices(
    resolutions: &ResolutionSet,
    grid: &BitrateGrid,
    indices: &[usize],
) -> BitrateLadder {
    assert_eq!(indices.len(), grid.len(), "one index per grid point");
    let values = grid.values();
    let crossovers = (1..resolutions.len())
        .map(|i| {
            indices
                .iter()
                .rposition(|&k| k <= i)
                .map_or(grid.min_log2(), |pos| values[pos])
        })
        .collect();
    BitrateLadder::new(resolutions.clone(), crossovers)
        .expect("last-position-at-most-i is non-decreasing in i")
}

pub fn ladder_lookup(ladder: &BitrateLadder, log2_rate: f64) -> usize {
    ladder.lookup(log2_rate)
}

/// Static ladder: per-boundary mean of log2 cross-overs (geometric mean of
/// linear rates).
pub fn average_ladder(ladders: &[BitrateLadder]) -> Result<BitrateLadder> {
    let first = ladders.first().ok_or(RqError::EmptyInput)?;
    if ladders.iter().any(|l| l.resolutions() != first.resolutions()) {
        return Err(RqError::MixedResolutionSets);
    }
    let n = ladders.len() as f64;
    let mut mean: Vec<f64> = (0..first.crossover_log2_rates().len())
        .map(|i| ladders.iter().map(|l| l.crossover_log2_rates()[i]).sum::<f64>() / n)
        .collect();
    mean.sort_by(f64::total_cmp);
    BitrateLadder::new(first.resolutions().clone(), mean)
}

//! Bjøntegaard delta bitrate over an arbitrary number of operating points.

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::rq::interp::MonotoneCubic;
use crate::rq::RqPoint;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BdBrResult {
    /// Average rate difference in percent; negative means the test saves bits.
    pub percent: f64,
    pub overlap_low: f64,
    pub overlap_high: f64,
}

/// Sorts by rate and keeps only points that raise the best quality so far,
/// so quality is strictly increasing and each level keeps its lowest rate.
fn prune(points: &[RqPoint]) -> Vec<RqPoint> {
    let mut sorted: Vec<RqPoint> = points
        .iter()
        .copied()
        .filter(|p| p.log2_rate.is_finite() && p.quality.is_finite())
        .collect();
    sorted.sort_by(|a, b| a.log2_rate.total_cmp(&b.log2_rate).then(a.quality.total_cmp(&b.quality)));
    let mut out: Vec<RqPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        if out.last().is_none_or(|l| p.quality > l.quality) {
            out.push(p);
        }
    }
    out
}

fn rate_of_quality(points: &[RqPoint]) -> Result<MonotoneCubic> {
    let p = prune(points);
    if p.len() < 2 {
        return Err(EvalError::TooFewPoints(p.len()));
    }
    let (q, r): (Vec<f64>, Vec<f64>) = p.iter().map(|p| (p.quality, p.log2_rate)).unzip();
    Ok(MonotoneCubic::new(q, r).expect("pruned qualities are strictly increasing"))
}

pub fn bd_br(reference: &[RqPoint], test: &[RqPoint]) -> Result<BdBrResult> {
    let r = rate_of_quality(reference)?;
    let t = rate_of_quality(test)?;
    let lo = r.x_min().max(t.x_min());
    let hi = r.x_max().min(t.x_max());
    if !(lo < hi) {
        return Err(EvalError::NoOverlap {
            reference: (r.x_min(), r.x_max()),
            test: (t.x_min(), t.x_max()),
        });
    }
    let mean_diff = (t.integrate(lo, hi) - r.integrate(lo, hi)) / (hi - lo);
    Ok(BdBrResult {
        percent: (mean_diff.exp2() - 1.0) * 100.0,
        overlap_low: lo,
        overlap_high: hi,
    })
}

use serde::{Deserialize, Serialize};

use super::{Frame, Plane, Result, VideoChunk, VideoError};

fn check_same_dims(a: &Plane, b: &Plane) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(VideoError::DimensionMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    Ok(())
}

/// Mean absolute luma difference per pixel.
pub fn temporal_complexity(prev: &Frame, next: &Frame) -> Result<f64> {
    check_same_dims(&prev.luma, &next.luma)?;
    let sum: u64 = prev
        .luma
        .data()
        .iter()
        .zip(next.luma.data())
        .map(|(&a, &b)| a.abs_diff(b) as u64)
        .sum();
    Ok(sum as f64 / prev.luma.data().len() as f64)
}

// Two-pass population standard deviation.
fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return 0.0;
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    var.sqrt()
}

/// Standard deviation of the 3x3 Sobel magnitude over interior pixels.
pub(crate) fn spatial_information(p: &Plane) -> f64 {
    let (w, h) = (p.width(), p.height());
    if w < 3 || h < 3 {
        return 0.0;
    }
    let mut mags = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        let (r0, r1, r2) = (p.row(y - 1), p.row(y), p.row(y + 1));
        for x in 1..w - 1 {
            let v = |r: &[u8], dx: usize| r[x + dx - 1] as f64;
            let gx = (v(r0, 2) + 2.0 * v(r1, 2) + v(r2, 2)) - (v(r0, 0) + 2.0 * v(r1, 0) + v(r2, 0));
            let gy = (v(r2, 0) + 2.0 * v(r2, 1) + v(r2, 2)) - (v(r0, 0) + 2.0 * v(r0, 1) + v(r0, 2));
            mags.push((gx * gx + gy * gy).sqrt());
        }
    }
    std_dev(mags.iter().copied())
}

/// Standard deviation of the per-pixel luma difference `next - prev`.
pub(crate) fn temporal_information(prev: &Plane, next: &Plane) -> f64 {
    std_dev(
        prev.data()
            .iter()
            .zip(next.data())
            .map(|(&a, &b)| b as f64 - a as f64),
    )
}

/// `(SI, TI)`: maxima over frames / consecutive pairs.
pub fn si_ti(chunk: &VideoChunk) -> Result<(f64, f64)> {
    let frames = chunk.frames();
    if frames.len() < 2 {
        return Err(VideoError::TooFewFrames {
            need: 2,
            got: frames.len(),
        });
    }
    let si = frames
        .iter()
        .map(|f| spatial_information(&f.luma))
        .fold(0.0, f64::max);
    let ti = frames
        .windows(2)
        .map(|w| temporal_information(&w[0].luma, &w[1].luma))
        .fold(0.0, f64::max);
    Ok((si, ti))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneCutConfig {
    /// Trailing window of previous frame differences.
    pub window: usize,
    /// Multiple of the trailing median that flags a cut.
    pub threshold: f64,
}

impl Default for SceneCutConfig {
    fn default() -> Self {
        Self {
            window: 16,
            threshold: 8.0,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Frame indices `t` where `TC(t-1, t)` exceeds `threshold` times the median
/// of the preceding `window` differences. Frame 1 has no history and is never
/// flagged.
pub fn detect_scene_change(frames: &[Frame], cfg: &SceneCutConfig) -> Result<Vec<usize>> {
    if frames.len() < 2 {
        return Err(VideoError::TooFewFrames {
            need: 2,
            got: frames.len(),
        });
    }
    let tcs = frames
        .windows(2)
        .map(|w| temporal_complexity(&w[0], &w[1]))
        .collect::<Result<Vec<f64>>>()?;
    let mut cuts = Vec::new();
    for k in 1..tcs.len() {
        let start = k.saturating_sub(cfg.window.max(1));
        let mut hist = tcs[start..k].to_vec();
        if tcs[k] > median(&mut hist) * cfg.threshold {
            cuts.push(k + 1);
        }
    }
    Ok(cuts)
}

//! Separable Lanczos-3 resampling.

use super::{EvalError, Result};
use crate::video::{chroma_dims, Frame, Plane, VideoChunk};

const LOBES: f64 = 3.0;

fn lanczos(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.abs() >= LOBES || x.fract() == 0.0 {
        return 0.0;
    }
    let px = std::f64::consts::PI * x;
    LOBES * px.sin() * (px / LOBES).sin() / (px * px)
}

/// Normalized taps for one output sample: `(first input index, weights)`,
/// indices clamped to the edge when read.
#[derive(Debug)]
struct Taps {
    start: isize,
    weights: Vec<f64>,
}

/// Per-output-sample taps mapping `src` samples onto `dst`. When shrinking,
/// the kernel is stretched by the scale factor.
fn taps(src: usize, dst: usize) -> Vec<Taps> {
    let scale = src as f64 / dst as f64;
    let stretch = scale.max(1.0);
    let support = LOBES * stretch;
    (0..dst)
        .map(|o| {
            let center = (o as f64 + 0.5) * scale - 0.5;
            let start = (center - support).ceil() as isize;
            let end = (center + support).floor() as isize;
            let mut weights: Vec<f64> = (start..=end)
                .map(|j| lanczos((j as f64 - center) / stretch))
                .collect();
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            Taps { start, weights }
        })
        .collect()
}

fn clamp_index(j: isize, n: usize) -> usize {
    j.clamp(0, n as isize - 1) as usize
}

pub fn resize_plane(p: &Plane, width: usize, height: usize) -> Plane {
    let (sw, sh) = (p.width(), p.height());
    if (sw, sh) == (width, height) {
        return p.clone();
    }
    let hx = taps(sw, width);
    let mut tmp = vec![0.0f64; width * sh];
    for y in 0..sh {
        let row = p.row(y);
        for (x, t) in hx.iter().enumerate() {
            tmp[y * width + x] = t
                .weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * f64::from(row[clamp_index(t.start + k as isize, sw)]))
                .sum();
        }
    }
    let vy = taps(sh, height);
    let mut out = Vec::with_capacity(width * height);
    for t in &vy {
        for x in 0..width {
            let v: f64 = t
                .weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[clamp_index(t.start + k as isize, sh) * width + x])
                .sum();
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    Plane::new(width, height, out).expect("output sized to target")
}

/// Resizes luma to `width`x`height` and chroma (if any) to its 4:2:0 size.
pub fn lanczos_resize(frame: &Frame, width: usize, height: usize) -> Result<Frame> {
    if width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0 {
        return Err(EvalError::BadTarget { width, height });
    }
    let luma = resize_plane(&frame.luma, width, height);
    match &frame.chroma {
        None => Ok(Frame::luma_only(luma)),
        Some((cb, cr)) => {
            let (cw, ch) = chroma_dims(width, height);
            Ok(Frame::with_chroma(luma, resize_plane(cb, cw, ch), resize_plane(cr, cw, ch))?)
        }
    }
}

pub fn resize_chunk(chunk: &VideoChunk, width: usize, height: usize) -> Result<VideoChunk> {
    let frames = chunk
        .frames()
        .iter()
        .map(|f| lanczos_resize(f, width, height))
        .collect::<Result<Vec<_>>>()?;
    Ok(VideoChunk::new(chunk.fps(), frames)?)
}

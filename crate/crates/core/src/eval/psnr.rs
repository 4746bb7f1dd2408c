use super::{EvalError, Result};
use crate::video::VideoChunk;

/// Value reported when the reconstruction is (numerically) lossless.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Luma PSNR over all frames of a reconstruction already brought back to
/// native size.
pub fn scaled_psnr(native: &VideoChunk, reconstructed: &VideoChunk) -> Result<f64> {
    if native.width() != reconstructed.width()
        || native.height() != reconstructed.height()
        || native.frame_count() != reconstructed.frame_count()
    {
        return Err(EvalError::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            native.width(),
            native.height(),
            native.frame_count(),
            reconstructed.width(),
            reconstructed.height(),
            reconstructed.frame_count()
        )));
    }
    let mut sse = 0u64;
    for (a, b) in native.frames().iter().zip(reconstructed.frames()) {
        sse += a
            .luma
            .data()
            .iter()
            .zip(b.luma.data())
            .map(|(&x, &y)| {
                let d = i64::from(x) - i64::from(y);
                (d * d) as u64
            })
            .sum::<u64>();
    }
    let n = (native.width() * native.height() * native.frame_count()) as f64;
    let mse = sse as f64 / n;
    let peak = 255.0 * 255.0;
    if mse < peak * 1e-10 {
        return Ok(PSNR_CAP_DB);
    }
    Ok(10.0 * (peak / mse).log10())
}

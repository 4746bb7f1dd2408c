//! Headerless planar YUV 4:2:0 (I420) streams.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{chroma_dims, Frame, Plane, Result, VideoChunk, VideoError};

/// Geometry for a raw stream, usually stored next to it as `<file>.json`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
}

pub fn frame_size(width: usize, height: usize) -> usize {
    let (cw, ch) = chroma_dims(width, height);
    width * height + 2 * cw * ch
}

pub fn read_raw_yuv(bytes: &[u8], width: usize, height: usize, fps: f64) -> Result<VideoChunk> {
    if width == 0 || height == 0 {
        return Err(VideoError::InvalidPlane("zero dimension".into()));
    }
    let fs = frame_size(width, height);
    if bytes.is_empty() || bytes.len() % fs != 0 {
        return Err(VideoError::SizeMismatch {
            len: bytes.len(),
            frame_size: fs,
        });
    }
    let (cw, ch) = chroma_dims(width, height);
    let frames = bytes
        .chunks_exact(fs)
        .map(|f| {
            let (y, rest) = f.split_at(width * height);
            let (u, v) = rest.split_at(cw * ch);
            Frame::with_chroma(
                Plane::new(width, height, y.to_vec())?,
                Plane::new(cw, ch, u.to_vec())?,
                Plane::new(cw, ch, v.to_vec())?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    VideoChunk::new(fps, frames)
}

pub fn write_raw_yuv<W: Write>(chunk: &VideoChunk, mut w: W) -> Result<()> {
    let (cw, ch) = chroma_dims(chunk.width(), chunk.height());
    let neutral = vec![128u8; cw * ch];
    for f in chunk.frames() {
        w.write_all(f.luma.data())?;
        match &f.chroma {
            Some((u, v)) => {
                w.write_all(u.data())?;
                w.write_all(v.data())?;
            }
            None => {
                w.write_all(&neutral)?;
                w.write_all(&neutral)?;
            }
        }
    }
    Ok(())
}

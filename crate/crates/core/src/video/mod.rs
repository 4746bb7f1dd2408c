//! Raw video ingestion and content descriptors (GLCM texture statistics,
//! temporal complexity, SI/TI).

mod features;
mod glcm;
mod temporal;
pub mod y4m;
pub mod yuv;

use thiserror::Error;

pub use features::{
    chunk_features, read_feature_csv, write_feature_csv, FeatureCsvError, FeatureRecord, FeatureVector,
    FEATURE_COUNT, FEATURE_NAMES,
};
pub use glcm::{co_occurrence, glcm_descriptors, Direction, Glcm, GlcmConfig, GlcmDescriptors};
pub use temporal::{detect_scene_change, si_ti, temporal_complexity, SceneCutConfig};

#[derive(Debug, Error)]
pub enum VideoError {
    #[error("stream does not start with a YUV4MPEG2 signature")]
    BadMagic,
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("bad stream header: {0}")]
    BadHeader(String),
    #[error("frame {0} is truncated")]
    TruncatedFrame(usize),
    #[error("stream length {len} is not a multiple of frame size {frame_size}")]
    SizeMismatch { len: usize, frame_size: usize },
    #[error("frame must be at least 2x2 with at least one co-occurring pair")]
    FrameTooSmall,
    #[error("frame dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("need at least {need} frames, got {got}")]
    TooFewFrames { need: usize, got: usize },
    #[error("invalid plane: {0}")]
    InvalidPlane(String),
    #[error("invalid GLCM configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = VideoError> = std::result::Result<T, E>;

/// 8-bit sample plane, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(VideoError::InvalidPlane("zero dimension".into()));
        }
        if data.len() != width * height {
            return Err(VideoError::InvalidPlane(format!(
                "{} samples for {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("dimensions match")
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("dimensions match")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }
}

/// Chroma plane size for 4:2:0 subsampling.
pub fn chroma_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(2), height.div_ceil(2))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub luma: Plane,
    pub chroma: Option<(Plane, Plane)>,
}

impl Frame {
    pub fn luma_only(luma: Plane) -> Self {
        Self { luma, chroma: None }
    }

    pub fn with_chroma(luma: Plane, cb: Plane, cr: Plane) -> Result<Self> {
        let (cw, ch) = chroma_dims(luma.width, luma.height);
        for p in [&cb, &cr] {
            if p.width != cw || p.height != ch {
                return Err(VideoError::InvalidPlane(format!(
                    "chroma {}x{} does not match 4:2:0 of {}x{}",
                    p.width, p.height, luma.width, luma.height
                )));
            }
        }
        Ok(Self {
            luma,
            chroma: Some((cb, cr)),
        })
    }

    pub fn width(&self) -> usize {
        self.luma.width
    }

    pub fn height(&self) -> usize {
        self.luma.height
    }
}

/// A short run of frames with shared dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoChunk {
    width: usize,
    height: usize,
    fps: f64,
    frames: Vec<Frame>,
}

/// Default chunk length in frames.
pub const DEFAULT_CHUNK_FRAMES: usize = 64;

impl VideoChunk {
    pub fn new(fps: f64, frames: Vec<Frame>) -> Result<Self> {
        let first = frames.first().ok_or(VideoError::TooFewFrames { need: 1, got: 0 })?;
        let (w, h) = (first.width(), first.height());
        for f in &frames {
            if f.width() != w || f.height() != h {
                return Err(VideoError::DimensionMismatch(w, h, f.width(), f.height()));
            }
        }
        Ok(Self {
            width: w,
            height: h,
            fps,
            frames,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

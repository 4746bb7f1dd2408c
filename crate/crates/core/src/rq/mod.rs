//! Rate–quality curves, the convex hull over resolutions, cross-over bitrates
//! and bitrate ladders.
//!
//! Rates are carried as log2 of bits/sec everywhere; linear bps only appears
//! at the I/O boundary (see [`io`]).

mod hull;
pub mod interp;
pub mod io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hull::{
    average_ladder, cross_over_bitrates, hull_argmax_indices, hull_quality, ladder_from_indices,
    ladder_lookup,
};
use interp::MonotoneCubic;

#[derive(Debug, Error)]
pub enum RqError {
    #[error("curve needs at least 2 points, {0} survive pruning")]
    TooFewPoints(usize),
    #[error("non-finite rate or quality in input")]
    NonFinite,
    #[error("conflicting qualities for duplicate log2 rate {0}")]
    DuplicateRate(f64),
    #[error("invalid resolution set: {0}")]
    InvalidResolutionSet(String),
    #[error("invalid bitrate grid: {0}")]
    InvalidGrid(String),
    #[error("invalid ladder: {0}")]
    InvalidLadder(String),
    #[error("surface needs exactly one curve per resolution: {0}")]
    InvalidSurface(String),
    #[error("ladders use different resolution sets")]
    MixedResolutionSets,
    #[error("no ladders to average")]
    EmptyInput,
    #[error("chunk {chunk}: missing resolution {resolution}")]
    MissingResolution { chunk: String, resolution: String },
    #[error("chunk {chunk}: resolution {width}x{height} is not in the configured set")]
    UnknownResolution { chunk: String, width: u32, height: u32 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = RqError> = std::result::Result<T, E>;

/// One encodable resolution. `index` is its 1-based position in the set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resolution {
    pub index: usize,
    pub width: u32,
    pub height: u32,
    pub label: String,
}

/// Resolutions ordered by ascending height, indexed contiguously from 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Resolution>", into = "Vec<Resolution>")]
pub struct ResolutionSet(Vec<Resolution>);

impl ResolutionSet {
    /// Builds a set from `(width, height)` pairs in any order; labels are
    /// `"{height}p"`.
    pub fn from_dims(dims: &[(u32, u32)]) -> Result<Self> {
        let mut dims = dims.to_vec();
        dims.sort_by_key(|&(_, h)| h);
        let resolutions = dims
            .into_iter()
            .enumerate()
            .map(|(i, (width, height))| Resolution {
                index: i + 1,
                width,
                height,
                label: format!("{height}p"),
            })
            .collect();
        Self::new(resolutions)
    }

    pub fn new(resolutions: Vec<Resolution>) -> Result<Self> {
        if resolutions.len() < 2 {
            return Err(RqError::InvalidResolutionSet("need at least 2 resolutions".into()));
        }
        for (pos, r) in resolutions.iter().enumerate() {
            if r.index != pos + 1 {
                return Err(RqError::InvalidResolutionSet(format!(
                    "index {} at position {}",
                    r.index,
                    pos + 1
                )));
            }
            if r.width == 0 || r.height == 0 || r.width % 2 != 0 || r.height % 2 != 0 {
                return Err(RqError::InvalidResolutionSet(format!(
                    "{}x{} must be positive and even",
                    r.width, r.height
                )));
            }
        }
        if resolutions.windows(2).any(|w| w[1].height <= w[0].height) {
            return Err(RqError::InvalidResolutionSet(
                "heights must be strictly ascending".into(),
            ));
        }
        Ok(Self(resolutions))
    }

    /// 960x540, 1280x720, 1920x1080, 3840x2160.
    pub fn uhd_default() -> Self {
        Self::from_dims(&[(960, 540), (1280, 720), (1920, 1080), (3840, 2160)])
            .expect("static resolution set is valid")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based lookup.
    pub fn get(&self, index: usize) -> Option<&Resolution> {
        index.checked_sub(1).and_then(|i| self.0.get(i))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Resolution> {
        self.0.iter()
    }

    pub fn find(&self, width: u32, height: u32) -> Option<&Resolution> {
        self.0.iter().find(|r| r.width == width && r.height == height)
    }

    pub fn highest(&self) -> &Resolution {
        &self.0[self.0.len() - 1]
    }
}

impl TryFrom<Vec<Resolution>> for ResolutionSet {
    type Error = RqError;

    fn try_from(v: Vec<Resolution>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ResolutionSet> for Vec<Resolution> {
    fn from(s: ResolutionSet) -> Self {
        s.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RqPoint {
    pub log2_rate: f64,
    /// Scaled PSNR, dB.
    pub quality: f64,
}

impl RqPoint {
    pub fn new(log2_rate: f64, quality: f64) -> Self {
        Self { log2_rate, quality }
    }

    pub fn from_bps(bps: f64, quality: f64) -> Self {
        Self::new(bps.log2(), quality)
    }
}

/// Rate–quality samples of one resolution, sorted by rate and Pareto-pruned so
/// that quality never decreases with rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RqCurve {
    resolution: Resolution,
    points: Vec<RqPoint>,
    interp: MonotoneCubic,
}

/// Sorts, deduplicates and Pareto-prunes raw encodes into a monotone curve.
pub fn build_curve(resolution: Resolution, raw_points: &[RqPoint]) -> Result<RqCurve> {
    if raw_points
        .iter()
        .any(|p| !p.log2_rate.is_finite() || !p.quality.is_finite())
    {
        return Err(RqError::NonFinite);
    }
    let mut pts = raw_points.to_vec();
    pts.sort_by(|a, b| a.log2_rate.total_cmp(&b.log2_rate));
    let mut dedup: Vec<RqPoint> = Vec::with_capacity(pts.len());
    for p in pts {
        match dedup.last() {
            Some(last) if last.log2_rate == p.log2_rate => {
                if last.quality != p.quality {
                    return Err(RqError::DuplicateRate(p.log2_rate));
                }
            }
            _ => dedup.push(p),
        }
    }
    let mut pruned: Vec<RqPoint> = Vec::with_capacity(dedup.len());
    let mut best = f64::NEG_INFINITY;
    for p in dedup {
        if p.quality >= best {
            best = p.quality;
            pruned.push(p);
        }
    }
    if pruned.len() < 2 {
        return Err(RqError::TooFewPoints(pruned.len()));
    }
    let interp = MonotoneCubic::new(
        pruned.iter().map(|p| p.log2_rate).collect(),
        pruned.iter().map(|p| p.quality).collect(),
    )
    .expect("pruned points are finite and strictly increasing in rate");
    Ok(RqCurve {
        resolution,
        points: pruned,
        interp,
    })
}

impl RqCurve {
    pub fn resolution(&self) -> &Resolution {
        &self.resolution
    }

    pub fn points(&self) -> &[RqPoint] {
        &self.points
    }

    pub fn min_log2_rate(&self) -> f64 {
        self.points[0].log2_rate
    }

    pub fn max_log2_rate(&self) -> f64 {
        self.points[self.points.len() - 1].log2_rate
    }

    /// Whether the curve has an operating point at or below `log2_rate`.
    pub fn covers(&self, log2_rate: f64) -> bool {
        log2_rate >= self.min_log2_rate()
    }

    /// Monotone cubic interpolation, flat outside the sampled range.
    pub fn interp_quality(&self, log2_rate: f64) -> f64 {
        self.interp.eval(log2_rate)
    }
}

pub fn interp_quality(curve: &RqCurve, log2_rate: f64) -> f64 {
    curve.interp_quality(log2_rate)
}

/// One curve per resolution for a single chunk.
#[derive(Clone, Debug, PartialEq)]
pub struct RateQualitySurface {
    resolutions: ResolutionSet,
    curves: Vec<RqCurve>,
}

impl RateQualitySurface {
    /// `curves` may be given in any order but must cover every resolution once.
    pub fn new(resolutions: ResolutionSet, mut curves: Vec<RqCurve>) -> Result<Self> {
        if curves.len() != resolutions.len() {
            return Err(RqError::InvalidSurface(format!(
                "{} curves for {} resolutions",
                curves.len(),
                resolutions.len()
            )));
        }
        curves.sort_by_key(|c| c.resolution.index);
        for (c, r) in curves.iter().zip(resolutions.iter()) {
            if c.resolution != *r {
                return Err(RqError::InvalidSurface(format!(
                    "curve for {} does not match {}",
                    c.resolution.label, r.label
                )));
            }
        }
        Ok(Self { resolutions, curves })
    }

    pub fn resolutions(&self) -> &ResolutionSet {
        &self.resolutions
    }

    pub fn curves(&self) -> &[RqCurve] {
        &self.curves
    }

    /// 1-based.
    pub fn curve(&self, index: usize) -> Option<&RqCurve> {
        index.checked_sub(1).and_then(|i| self.curves.get(i))
    }
}

/// Log-spaced bitrate grid: `points` values evenly spaced in log2 rate.
///
/// One grid step is the resolution at which cross-overs are located.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitrateGrid {
    min_log2: f64,
    max_log2: f64,
    points: usize,
}

impl BitrateGrid {
    pub fn new(min_log2: f64, max_log2: f64, points: usize) -> Result<Self> {
        if !min_log2.is_finite() || !max_log2.is_finite() {
            return Err(RqError::InvalidGrid("bounds must be finite".into()));
        }
        if min_log2 >= max_log2 {
            return Err(RqError::InvalidGrid(format!(
                "MinRate {min_log2} must be below MaxRate {max_log2}"
            )));
        }
        if points < 2 {
            return Err(RqError::InvalidGrid("need at least 2 points".into()));
        }
        Ok(Self {
            min_log2,
            max_log2,
            points,
        })
    }

    pub fn from_bps(min_bps: f64, max_bps: f64, points: usize) -> Result<Self> {
        if min_bps <= 0.0 || max_bps <= 0.0 {
            return Err(RqError::InvalidGrid("bitrates must be positive".into()));
        }
        Self::new(min_bps.log2(), max_bps.log2(), points)
    }

    pub fn min_log2(&self) -> f64 {
        self.min_log2
    }

    pub fn max_log2(&self) -> f64 {
        self.max_log2
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.max_log2 - self.min_log2) / (self.points - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.max_log2
        } else {
            self.min_log2 + i as f64 * self.step()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }
}

impl Default for BitrateGrid {
    /// 100 points over log2 rates [6, 16].
    fn default() -> Self {
        Self::new(6.0, 16.0, 100).expect("static grid is valid")
    }
}

/// `|S| - 1` non-decreasing cross-over log2 rates. Rate `r` maps to the
/// smallest index `i` with `r <= crossover[i]`, else to the top resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LadderRepr", into = "LadderRepr")]
pub struct BitrateLadder {
    resolutions: ResolutionSet,
    crossovers: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LadderRepr {
    resolutions: ResolutionSet,
    crossover_log2_bps: Vec<f64>,
}

impl TryFrom<LadderRepr> for BitrateLadder {
    type Error = RqError;

    fn try_from(r: LadderRepr) -> Result<Self> {
        Self::new(r.resolutions, r.crossover_log2_bps)
    }
}

impl From<BitrateLadder> for LadderRepr {
    fn from(l: BitrateLadder) -> Self {
        Self {
            resolutions: l.resolutions,
            crossover_log2_bps: l.crossovers,
        }
    }
}

impl BitrateLadder {
    pub fn new(resolutions: ResolutionSet, crossovers: Vec<f64>) -> Result<Self> {
        if crossovers.len() + 1 != resolutions.len() {
            return Err(RqError::InvalidLadder(format!(
                "{} cross-overs for {} resolutions",
                crossovers.len(),
                resolutions.len()
            )));
        }
        if crossovers.iter().any(|c| !c.is_finite()) {
            return Err(RqError::InvalidLadder("non-finite cross-over".into()));
        }
        if crossovers.windows(2).any(|w| w[1] < w[0]) {
            return Err(RqError::InvalidLadder("cross-overs must be non-decreasing".into()));
        }
        Ok(Self {
            resolutions,
            crossovers,
        })
    }

    pub fn resolutions(&self) -> &ResolutionSet {
        &self.resolutions
    }

    pub fn crossover_log2_rates(&self) -> &[f64] {
        &self.crossovers
    }

    /// 1-based resolution index for `log2_rate`; boundaries belong to the
    /// lower resolution.
    pub fn lookup(&self, log2_rate: f64) -> usize {
        self.crossovers
            .iter()
            .position(|&c| log2_rate <= c)
            .map_or(self.resolutions.len(), |i| i + 1)
    }
}

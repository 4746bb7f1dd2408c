//! Gray-level co-occurrence matrix and its five Haralick-style descriptors.

use serde::{Deserialize, Serialize};

use super::{Frame, Plane, Result, VideoError};

/// Neighbor direction; offsets point right/up in image coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "0")]
    Deg0,
    #[serde(rename = "45")]
    Deg45,
    #[serde(rename = "90")]
    Deg90,
    #[serde(rename = "135")]
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Self::Deg0, Self::Deg45, Self::Deg90, Self::Deg135];

    /// `(dx, dy)` at `distance`.
    pub fn offset(self, distance: usize) -> (isize, isize) {
        let d = distance as isize;
        match self {
            Self::Deg0 => (d, 0),
            Self::Deg45 => (d, -d),
            Self::Deg90 => (0, -d),
            Self::Deg135 => (-d, -d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlcmConfig {
    pub gray_levels: usize,
    pub distance: usize,
    pub directions: Vec<Direction>,
    pub symmetric: bool,
}

impl Default for GlcmConfig {
    fn default() -> Self {
        Self {
            gray_levels: 8,
            distance: 1,
            directions: Direction::ALL.to_vec(),
            symmetric: true,
        }
    }
}

impl GlcmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gray_levels < 2 || self.gray_levels > 256 {
            return Err(VideoError::InvalidConfig("gray_levels must be in [2, 256]".into()));
        }
        if self.distance < 1 {
            return Err(VideoError::InvalidConfig("distance must be >= 1".into()));
        }
        if self.directions.is_empty() {
            return Err(VideoError::InvalidConfig("at least one direction".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GlcmDescriptors {
    pub contrast: f64,
    pub correlation: f64,
    pub energy: f64,
    pub homogeneity: f64,
    pub entropy: f64,
}

/// Normalized co-occurrence probabilities, `levels x levels`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Glcm {
    levels: usize,
    p: Vec<f64>,
}

impl Glcm {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn descriptors(&self) -> GlcmDescriptors {
        let l = self.levels;
        let mut mu_r = 0.0;
        let mut mu_c = 0.0;
        for i in 0..l {
            for j in 0..l {
                let p = self.p[i * l + j];
                mu_r += i as f64 * p;
                mu_c += j as f64 * p;
            }
        }
        let mut var_r = 0.0;
        let mut var_c = 0.0;
        let mut cov = 0.0;
        let mut d = GlcmDescriptors::default();
        for i in 0..l {
            for j in 0..l {
                let p = self.p[i * l + j];
                if p == 0.0 {
                    continue;
                }
                let (fi, fj) = (i as f64, j as f64);
                let diff = fi - fj;
                d.contrast += p * diff * diff;
                d.energy += p * p;
                d.homogeneity += p / (1.0 + diff.abs());
                d.entropy -= p * p.ln();
                var_r += p * (fi - mu_r) * (fi - mu_r);
                var_c += p * (fj - mu_c) * (fj - mu_c);
                cov += p * (fi - mu_r) * (fj - mu_c);
            }
        }
        let denom = var_r.sqrt() * var_c.sqrt();
        d.correlation = if denom > 0.0 { cov / denom } else { 0.0 };
        d
    }
}

/// Quantizes 8-bit samples into `levels` uniform bins.
#[inline]
pub(crate) fn quantize(v: u8, levels: usize) -> usize {
    (v as usize * levels) >> 8
}

pub fn co_occurrence(plane: &Plane, cfg: &GlcmConfig) -> Result<Glcm> {
    cfg.validate()?;
    let (w, h) = (plane.width(), plane.height());
    if w < 2 || h < 2 {
        return Err(VideoError::FrameTooSmall);
    }
    let l = cfg.gray_levels;
    let q: Vec<u16> = plane.data().iter().map(|&v| quantize(v, l) as u16).collect();
    let mut counts = vec![0u64; l * l];
    for dir in &cfg.directions {
        let (dx, dy) = dir.offset(cfg.distance);
        let x0 = (-dx).max(0) as usize;
        let x1 = w.saturating_sub(dx.max(0) as usize);
        let y0 = (-dy).max(0) as usize;
        let y1 = h.saturating_sub(dy.max(0) as usize);
        if x0 >= x1 || y0 >= y1 {
            continue;
        }
        for y in y0..y1 {
            let row = &q[y * w..(y + 1) * w];
            let ny = (y as isize + dy) as usize;
            let nrow = &q[ny * w..(ny + 1) * w];
            for x in x0..x1 {
                let a = row[x] as usize;
                let b = nrow[(x as isize + dx) as usize] as usize;
                counts[a * l + b] += 1;
                if cfg.symmetric {
                    counts[b * l + a] += 1;
                }
            }
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(VideoError::FrameTooSmall);
    }
    let inv = 1.0 / total as f64;
    Ok(Glcm {
        levels: l,
        p: counts.into_iter().map(|c| c as f64 * inv).collect(),
    })
}

/// GLCM descriptors of the frame's luma plane.
pub fn glcm_descriptors(frame: &Frame, cfg: &GlcmConfig) -> Result<GlcmDescriptors> {
    Ok(co_occurrence(&frame.luma, cfg)?.descriptors())
}

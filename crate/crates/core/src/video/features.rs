use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::glcm::{glcm_descriptors, GlcmConfig};
use super::temporal::{si_ti, temporal_complexity};
use super::{Result, VideoChunk, VideoError};

pub const FEATURE_COUNT: usize = 9;

/// Column order of [`FeatureVector::to_array`] and the feature CSV.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "glcm_contrast",
    "glcm_correlation",
    "glcm_energy",
    "glcm_homogeneity",
    "glcm_entropy",
    "tc_mean",
    "tc_std",
    "si",
    "ti",
];

/// Content descriptors of one chunk, the learners' input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub glcm_contrast: f64,
    pub glcm_correlation: f64,
    pub glcm_energy: f64,
    pub glcm_homogeneity: f64,
    pub glcm_entropy: f64,
    pub tc_mean: f64,
    pub tc_std: f64,
    pub si: f64,
    pub ti: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.glcm_contrast,
            self.glcm_correlation,
            self.glcm_energy,
            self.glcm_homogeneity,
            self.glcm_entropy,
            self.tc_mean,
            self.tc_std,
            self.si,
            self.ti,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_COUNT]) -> Self {
        Self {
            glcm_contrast: a[0],
            glcm_correlation: a[1],
            glcm_energy: a[2],
            glcm_homogeneity: a[3],
            glcm_entropy: a[4],
            tc_mean: a[5],
            tc_std: a[6],
            si: a[7],
            ti: a[8],
        }
    }

    /// Checks the value-range invariants.
    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
            && self.glcm_energy > 0.0
            && self.glcm_energy <= 1.0
            && self.glcm_homogeneity > 0.0
            && self.glcm_homogeneity <= 1.0
            && self.glcm_entropy >= 0.0
            && self.glcm_contrast >= 0.0
            && self.tc_mean >= 0.0
    }
}

/// One row of the feature CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRecord {
    pub chunk_id: String,
    pub features: FeatureVector,
}

/// Per-frame GLCM averaged over frames, TC statistics over consecutive pairs,
/// and SI/TI. Frames are processed in parallel and reduced in frame order.
pub fn chunk_features(chunk: &VideoChunk, cfg: &GlcmConfig) -> Result<FeatureVector> {
    let frames = chunk.frames();
    if frames.len() < 2 {
        return Err(VideoError::TooFewFrames {
            need: 2,
            got: frames.len(),
        });
    }
    let per_frame = frames
        .par_iter()
        .map(|f| glcm_descriptors(f, cfg))
        .collect::<Result<Vec<_>>>()?;
    let tcs = frames
        .par_windows(2)
        .map(|w| temporal_complexity(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let (si, ti) = si_ti(chunk)?;

    let n = per_frame.len() as f64;
    let mean_of = |f: fn(&super::GlcmDescriptors) -> f64| per_frame.iter().map(f).sum::<f64>() / n;
    let tc_mean = tcs.iter().sum::<f64>() / tcs.len() as f64;
    let tc_var = tcs.iter().map(|t| (t - tc_mean) * (t - tc_mean)).sum::<f64>() / tcs.len() as f64;

    Ok(FeatureVector {
        glcm_contrast: mean_of(|d| d.contrast),
        glcm_correlation: mean_of(|d| d.correlation),
        glcm_energy: mean_of(|d| d.energy),
        glcm_homogeneity: mean_of(|d| d.homogeneity),
        glcm_entropy: mean_of(|d| d.entropy),
        tc_mean,
        tc_std: tc_var.sqrt(),
        si,
        ti,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing column {0}")]
    MissingColumn(&'static str),
    #[error("line {line}: bad value {value:?} in column {column}")]
    BadValue {
        line: u64,
        column: &'static str,
        value: String,
    },
}

/// Reads a feature CSV; columns are matched by header name.
pub fn read_feature_csv<R: std::io::Read>(reader: R) -> std::result::Result<Vec<FeatureRecord>, FeatureCsvError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(FeatureCsvError::MissingColumn(name))
    };
    let id_col = col("chunk_id")?;
    let cols = FEATURE_NAMES
        .iter()
        .map(|n| col(n))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut vals = [0.0; FEATURE_COUNT];
        for (k, &c) in cols.iter().enumerate() {
            let raw = rec.get(c).unwrap_or("");
            vals[k] = raw.parse().map_err(|_| FeatureCsvError::BadValue {
                line,
                column: FEATURE_NAMES[k],
                value: raw.to_string(),
            })?;
        }
        out.push(FeatureRecord {
            chunk_id: rec.get(id_col).unwrap_or("").to_string(),
            features: FeatureVector::from_array(vals),
        });
    }
    Ok(out)
}

pub fn write_feature_csv<W: std::io::Write>(
    writer: W,
    rows: &[FeatureRecord],
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(std::iter::once("chunk_id").chain(FEATURE_NAMES))?;
    for r in rows {
        let vals = r.features.to_array();
        w.write_record(
            std::iter::once(r.chunk_id.clone()).chain(vals.iter().map(|v| v.to_string())),
        )?;
    }
    w.flush()?;
    Ok(())
}

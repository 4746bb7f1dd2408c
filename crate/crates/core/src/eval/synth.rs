//! Synthetic sequences: one latent complexity drives both the content
//! features and the rate-quality curves, with independent noise on each side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::SyntheticParams;
use crate::rq::{cross_over_bitrates, BitrateGrid, BitrateLadder, RateQualitySurface, ResolutionSet};
use crate::video::{FeatureVector, FEATURE_COUNT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticDatasetSpec {
    pub sequences: usize,
    pub latent_min: f64,
    pub latent_max: f64,
    /// Feature `j` is `intercept[j] + slope[j] * (z + u)`, `u ~ U(-noise, noise)`.
    pub feature_intercept: [f64; FEATURE_COUNT],
    pub feature_slope: [f64; FEATURE_COUNT],
    pub feature_noise: f64,
    /// Curve parameters at latent 0.
    pub base: SyntheticParams,
    /// Onsets move by `onset_slope * z`.
    pub onset_slope: f64,
    /// Ceilings move by `ceiling_slope * z`.
    pub ceiling_slope: f64,
    /// Steepness scales by `1 - steepness_decay * z`.
    pub steepness_decay: f64,
    /// Per-resolution onset offset `~ U(-onset_jitter, onset_jitter)`, not
    /// visible in the features.
    pub onset_jitter: f64,
    pub grid: BitrateGrid,
    pub seed: u64,
}

impl Default for SyntheticDatasetSpec {
    fn default() -> Self {
        Self {
            sequences: 100,
            latent_min: 0.0,
            latent_max: 1.0,
            feature_intercept: [2.0, 0.95, 0.5, 0.9, 1.5, 1.0, 0.3, 20.0, 2.0],
            feature_slope: [20.0, -0.5, -0.35, -0.5, 2.5, 12.0, 3.0, 80.0, 30.0],
            feature_noise: 0.08,
            base: SyntheticParams {
                ceiling: vec![38.0, 42.0, 46.0, 50.0],
                steepness: vec![1.2, 1.0, 0.8, 0.6],
                onset: vec![5.0, 6.3, 7.3, 8.3],
            },
            onset_slope: 2.0,
            ceiling_slope: -2.0,
            steepness_decay: 0.2,
            onset_jitter: 0.3,
            grid: BitrateGrid::default(),
            seed: 2024,
        }
    }
}

/// One synthetic sequence with its measured surface and ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub chunk_id: String,
    pub latent: f64,
    pub features: FeatureVector,
    pub params: SyntheticParams,
    pub surface: RateQualitySurface,
    pub gt_ladder: BitrateLadder,
}

impl SyntheticDatasetSpec {
    pub fn features(&self, latent: f64, noise: &[f64; FEATURE_COUNT]) -> FeatureVector {
        let mut a = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            a[j] = self.feature_intercept[j] + self.feature_slope[j] * (latent + noise[j]);
        }
        FeatureVector::from_array(a)
    }

    pub fn params(&self, latent: f64, jitter: &[f64]) -> SyntheticParams {
        let b = &self.base;
        SyntheticParams {
            ceiling: b.ceiling.iter().map(|u| u + self.ceiling_slope * latent).collect(),
            steepness: b.steepness.iter().map(|k| k * (1.0 - self.steepness_decay * latent)).collect(),
            onset: b
                .onset
                .iter()
                .zip(jitter)
                .map(|(o, j)| o + self.onset_slope * latent + j)
                .collect(),
        }
    }
}

pub fn generate_synthetic_dataset(spec: &SyntheticDatasetSpec) -> crate::rq::Result<Vec<DatasetEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let set = ResolutionSet::uhd_default();
    let mut out = Vec::with_capacity(spec.sequences);
    for i in 0..spec.sequences {
        let latent = if spec.latent_max > spec.latent_min {
            rng.gen_range(spec.latent_min..spec.latent_max)
        } else {
            spec.latent_min
        };
        let mut noise = [0.0; FEATURE_COUNT];
        for v in &mut noise {
            *v = sym(&mut rng, spec.feature_noise);
        }
        let jitter: Vec<f64> = (0..set.len()).map(|_| sym(&mut rng, spec.onset_jitter)).collect();
        let params = spec.params(latent, &jitter);
        let surface = params.tabulate(&set, &spec.grid)?;
        let gt_ladder = cross_over_bitrates(&surface, &spec.grid);
        out.push(DatasetEntry {
            chunk_id: format!("syn{i:03}"),
            latent,
            features: spec.features(latent, &noise),
            params,
            surface,
            gt_ladder,
        });
    }
    Ok(out)
}

fn sym(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.gen_range(-half_width..half_width)
    } else {
        0.0
    }
}

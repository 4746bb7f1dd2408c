//! Greedy backward feature elimination.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gp::{predict_crossover, train_regressor, RegressorModel};
use super::{train_classifier, FeatureMask, LearnError, LearnerConfig, Result, TrainingSample};
use crate::video::{FeatureVector, FEATURE_COUNT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Classifier,
    Regressor,
}

/// Masks visited from all features down to `target_k`, one per step.
pub fn rfe_path(
    samples: &[TrainingSample],
    kind: LearnerKind,
    target_k: usize,
    cfg: &LearnerConfig,
) -> Result<Vec<FeatureMask>> {
    if target_k == 0 || target_k > FEATURE_COUNT {
        return Err(LearnError::BadTargetK {
            target: target_k,
            available: FEATURE_COUNT,
        });
    }
    let mut mask = FeatureMask::all();
    let mut path = vec![mask.clone()];
    while mask.count() > target_k {
        let scores = importance(samples, kind, &mask, cfg)?;
        let weakest = mask
            .selected()
            .into_iter()
            .min_by(|&a, &b| scores[a].total_cmp(&scores[b]))
            .expect("mask is never empty");
        log::debug!("rfe {kind:?}: dropping feature {weakest} at {}", scores[weakest]);
        mask = mask.without(weakest);
        path.push(mask.clone());
    }
    Ok(path)
}

pub fn rfe_select(
    samples: &[TrainingSample],
    kind: LearnerKind,
    target_k: usize,
    cfg: &LearnerConfig,
) -> Result<FeatureMask> {
    Ok(rfe_path(samples, kind, target_k, cfg)?
        .pop()
        .expect("path holds at least the full mask"))
}

/// Per-feature score in full feature order; unselected entries are zero.
fn importance(
    samples: &[TrainingSample],
    kind: LearnerKind,
    mask: &FeatureMask,
    cfg: &LearnerConfig,
) -> Result<Vec<f64>> {
    match kind {
        LearnerKind::Classifier => Ok(train_classifier(samples, mask, &cfg.grid, &cfg.gbt)?.importance),
        LearnerKind::Regressor => {
            let model = train_regressor(samples, mask, &cfg.grid, &cfg.gp)?;
            let features: Vec<FeatureVector> = samples.iter().map(|s| s.features).collect();
            let base = regressor_mse(&model, samples, &features);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.gbt.seed);
            let mut out = vec![0.0; FEATURE_COUNT];
            for f in mask.selected() {
                let mut perm: Vec<usize> = (0..samples.len()).collect();
                perm.shuffle(&mut rng);
                let shuffled: Vec<FeatureVector> = features
                    .iter()
                    .zip(&perm)
                    .map(|(v, &p)| {
                        let mut a = v.to_array();
                        a[f] = features[p].to_array()[f];
                        FeatureVector::from_array(a)
                    })
                    .collect();
                out[f] = regressor_mse(&model, samples, &shuffled) - base;
            }
            Ok(out)
        }
    }
}

fn regressor_mse(model: &RegressorModel, samples: &[TrainingSample], features: &[FeatureVector]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (s, f) in samples.iter().zip(features) {
        for (b, &t) in s.gt_ladder.crossover_log2_rates().iter().enumerate() {
            let p = predict_crossover(model, f, b + 1).expect("boundary in range");
            sum += (p - t) * (p - t);
            n += 1;
        }
    }
    sum / n as f64
}

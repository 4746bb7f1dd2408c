//! Multi-class gradient boosting with softmax loss over
//! `(standardized features, log2 rate)` rows.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{BinnedMatrix, RegressionTree, TreeParams};
use super::{check_resolution_sets, FeatureMask, LearnError, Result, Standardizer, TrainingSample};
use crate::rq::{ladder_from_indices, BitrateGrid, BitrateLadder, ResolutionSet};
use crate::video::{FeatureVector, FEATURE_COUNT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtHyper {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// Row fraction drawn per round.
    pub subsample: f64,
    pub max_bins: usize,
    pub seed: u64,
}

impl Default for GbtHyper {
    fn default() -> Self {
        Self {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 5,
            subsample: 1.0,
            max_bins: 255,
            seed: 0x5eed,
        }
    }
}

impl GbtHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(LearnError::BadHyper("learning_rate must be positive".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(LearnError::BadHyper("subsample must be in (0, 1]".into()));
        }
        if self.max_bins < 2 || self.max_bins > 256 {
            return Err(LearnError::BadHyper("max_bins must be in 2..=256".into()));
        }
        Ok(())
    }
}

/// Trained softmax booster. `trees[k]` holds class `k + 1`'s trees.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierModel {
    pub resolutions: ResolutionSet,
    pub feature_mask: FeatureMask,
    pub standardization: Standardizer,
    pub learning_rate: f64,
    pub base_scores: Vec<f64>,
    pub trees: Vec<Vec<RegressionTree>>,
    /// Total split gain per feature (full feature order, rate column excluded).
    pub importance: Vec<f64>,
}

impl ClassifierModel {
    pub fn class_count(&self) -> usize {
        self.base_scores.len()
    }

    fn row(&self, features: &FeatureVector, log2_rate: f64) -> Vec<f64> {
        let mut row = self.standardization.transform(&self.feature_mask.apply(features));
        row.push(log2_rate);
        row
    }

    /// Raw per-class scores (log-odds up to a shared constant).
    pub fn scores(&self, features: &FeatureVector, log2_rate: f64) -> Vec<f64> {
        let row = self.row(features, log2_rate);
        self.base_scores
            .iter()
            .zip(&self.trees)
            .map(|(b, ts)| b + self.learning_rate * ts.iter().map(|t| t.predict(&row)).sum::<f64>())
            .collect()
    }
}

/// First index of the maximum, 1-based.
pub(crate) fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    best + 1
}

pub fn predict_class(model: &ClassifierModel, features: &FeatureVector, log2_rate: f64) -> usize {
    argmax_first(&model.scores(features, log2_rate))
}

/// Predicted class at every grid point, repaired into a valid ladder.
pub fn classifier_ladder(model: &ClassifierModel, features: &FeatureVector, grid: &BitrateGrid) -> BitrateLadder {
    let indices: Vec<usize> = grid
        .values()
        .into_iter()
        .map(|x| predict_class(model, features, x))
        .collect();
    ladder_from_indices(&model.resolutions, grid, &indices)
}

pub fn train_classifier(
    samples: &[TrainingSample],
    mask: &FeatureMask,
    grid: &BitrateGrid,
    hyper: &GbtHyper,
) -> Result<ClassifierModel> {
    hyper.validate()?;
    mask.validate()?;
    if samples.len() < 2 {
        return Err(LearnError::TooFewSamples {
            need: 2,
            got: samples.len(),
        });
    }
    check_resolution_sets(samples)?;
    let resolutions = samples[0].gt_ladder.resolutions().clone();
    let k = resolutions.len();

    let masked: Vec<Vec<f64>> = samples.iter().map(|s| mask.apply(&s.features)).collect();
    let standardization = Standardizer::fit(&masked);
    let rates = grid.values();
    let mut rows = Vec::with_capacity(samples.len() * rates.len());
    let mut labels = Vec::with_capacity(rows.capacity());
    for (s, m) in samples.iter().zip(&masked) {
        let z = standardization.transform(m);
        for &x in &rates {
            let mut row = z.clone();
            row.push(x);
            rows.push(row);
            labels.push(s.gt_ladder.lookup(x) - 1);
        }
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(LearnError::DegenerateLabels);
    }

    let n = rows.len();
    let data = BinnedMatrix::new(&rows, hyper.max_bins);
    let n_cols = data.n_cols();
    drop(rows);

    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l] += 1;
    }
    let base_scores: Vec<f64> = counts
        .iter()
        .map(|&c| ((c as f64 + 1.0) / (n as f64 + k as f64)).ln())
        .collect();

    let params = TreeParams {
        max_depth: hyper.max_depth,
        min_leaf: hyper.min_leaf,
    };
    let shrink = (k as f64 - 1.0) / k as f64;
    let leaf = move |g: f64, h: f64| if h.abs() < 1e-150 { 0.0 } else { shrink * g / h };

    let mut f: Vec<Vec<f64>> = base_scores.iter().map(|&b| vec![b; n]).collect();
    let mut trees: Vec<Vec<RegressionTree>> = vec![Vec::with_capacity(hyper.rounds); k];
    let mut gains = vec![0.0; n_cols];
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let all_rows: Vec<usize> = (0..n).collect();
    let mut prob = vec![vec![0.0; n]; k];

    for _ in 0..hyper.rounds {
        for i in 0..n {
            let m = (0..k).map(|c| f[c][i]).fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = (0..k).map(|c| (f[c][i] - m).exp()).sum();
            for c in 0..k {
                prob[c][i] = (f[c][i] - m).exp() / z;
            }
        }
        let picked: Vec<usize> = if hyper.subsample < 1.0 {
            let take = ((n as f64 * hyper.subsample).ceil() as usize).clamp(1, n);
            let mut idx = all_rows.clone();
            idx.shuffle(&mut rng);
            idx.truncate(take);
            idx.sort_unstable();
            idx
        } else {
            all_rows.clone()
        };

        let fitted: Vec<(RegressionTree, Vec<f64>)> = (0..k)
            .into_par_iter()
            .map(|c| {
                let p = &prob[c];
                let grad: Vec<f64> = (0..n)
                    .map(|i| f64::from(u8::from(labels[i] == c)) - p[i])
                    .collect();
                let hess: Vec<f64> = p.iter().map(|&q| q * (1.0 - q)).collect();
                let mut g = vec![0.0; n_cols];
                let t = RegressionTree::fit(&data, &picked, &grad, &hess, params, &leaf, &mut g);
                (t, g)
            })
            .collect();

        for (c, (tree, g)) in fitted.into_iter().enumerate() {
            for (acc, v) in gains.iter_mut().zip(&g) {
                *acc += v;
            }
            update_scores(&tree, &data, &mut f[c], hyper.learning_rate);
            trees[c].push(tree);
        }
    }

    let mut importance = vec![0.0; FEATURE_COUNT];
    for (col, feat) in mask.selected().into_iter().enumerate() {
        importance[feat] = gains[col];
    }
    Ok(ClassifierModel {
        resolutions,
        feature_mask: mask.clone(),
        standardization,
        learning_rate: hyper.learning_rate,
        base_scores,
        trees,
        importance,
    })
}

fn update_scores(tree: &RegressionTree, data: &BinnedMatrix, f: &mut [f64], lr: f64) {
    for (i, fi) in f.iter_mut().enumerate() {
        *fi += lr * tree.predict_binned(data, i);
    }
}

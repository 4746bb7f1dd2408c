//! One Gaussian-process regressor per resolution boundary, RBF + white noise
//! kernel on standardized features, hyperparameters picked by log marginal
//! likelihood over a log-spaced grid.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_resolution_sets, FeatureMask, LearnError, Result, Standardizer, TrainingSample};
use crate::rq::{BitrateGrid, BitrateLadder, ResolutionSet};
use crate::video::FeatureVector;

/// `points` values log-spaced over `[min, max]`; one point yields `min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl LogGrid {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points }
    }

    pub fn fixed(value: f64) -> Self {
        Self::new(value, value, 1)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.min];
        }
        let (a, b) = (self.min.ln(), self.max.ln());
        (0..self.points)
            .map(|i| (a + (b - a) * i as f64 / (self.points - 1) as f64).exp())
            .collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min > 0.0 && self.max >= self.min && self.max.is_finite()) || self.points == 0 {
            return Err(LearnError::BadHyper(format!("{name} grid must be positive and ordered")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpHyper {
    pub length_scale: LogGrid,
    pub signal_variance: LogGrid,
    pub noise_variance: LogGrid,
}

impl Default for GpHyper {
    fn default() -> Self {
        Self {
            length_scale: LogGrid::new(0.1, 10.0, 8),
            signal_variance: LogGrid::new(0.05, 20.0, 8),
            noise_variance: LogGrid::new(1e-4, 1.0, 8),
        }
    }
}

impl GpHyper {
    pub fn validate(&self) -> Result<()> {
        self.length_scale.validate("length_scale")?;
        self.signal_variance.validate("signal_variance")?;
        self.noise_variance.validate("noise_variance")
    }

    /// Candidates in length-scale-major order.
    pub fn candidates(&self) -> Vec<GpKernelParams> {
        let sv = self.signal_variance.values();
        let nv = self.noise_variance.values();
        let mut out = Vec::new();
        for &l in &self.length_scale.values() {
            for &s in &sv {
                for &n in &nv {
                    out.push(GpKernelParams {
                        length_scale: l,
                        signal_variance: s,
                        noise_variance: n,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpKernelParams {
    pub signal_variance: f64,
    pub length_scale: f64,
    pub noise_variance: f64,
}

impl GpKernelParams {
    fn rbf(&self, sq_dist: f64) -> f64 {
        self.signal_variance * (-0.5 * sq_dist / (self.length_scale * self.length_scale)).exp()
    }
}

/// Posterior of one boundary, targets normalized to zero mean, unit scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGp {
    pub kernel: GpKernelParams,
    pub alpha: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
    pub log_marginal_likelihood: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressorModel {
    pub resolutions: ResolutionSet,
    pub feature_mask: FeatureMask,
    pub standardization: Standardizer,
    /// Standardized training inputs shared by all boundaries.
    pub inputs: Vec<Vec<f64>>,
    pub gps: Vec<BoundaryGp>,
    /// Predictions are clamped to this log2 range.
    pub rate_bounds: (f64, f64),
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sq_dist_matrix(x: &[Vec<f64>]) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| sq_dist(&x[i], &x[j]))
}

fn kernel_matrix(d2: &DMatrix<f64>, p: &GpKernelParams, jitter: f64) -> DMatrix<f64> {
    let n = d2.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        p.rbf(d2[(i, j)]) + if i == j { p.noise_variance + jitter } else { 0.0 }
    })
}

/// Log marginal likelihood of `y` under the kernel, by Cholesky. `None` when
/// the kernel matrix is not positive definite.
pub fn log_marginal_likelihood(inputs: &[Vec<f64>], y: &[f64], params: &GpKernelParams) -> Option<f64> {
    let d2 = sq_dist_matrix(inputs);
    lml_cholesky(&d2, y, params, 0.0).map(|(l, _)| l)
}

fn lml_cholesky(d2: &DMatrix<f64>, y: &[f64], p: &GpKernelParams, jitter: f64) -> Option<(f64, Vec<f64>)> {
    let n = y.len();
    let chol = kernel_matrix(d2, p, jitter).cholesky()?;
    let yv = DVector::from_column_slice(y);
    let alpha = chol.solve(&yv);
    let log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    let lml = -0.5 * yv.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    Some((lml, alpha.as_slice().to_vec()))
}

/// Scores every candidate sharing one eigendecomposition per length scale:
/// `K = sv * Q diag(lambda) Q^T + nv I`.
fn grid_search(d2: &DMatrix<f64>, y: &[f64], hyper: &GpHyper) -> Vec<(GpKernelParams, f64)> {
    let n = y.len() as f64;
    let yv = DVector::from_column_slice(y);
    let sv = hyper.signal_variance.values();
    let nv = hyper.noise_variance.values();
    let per_ls: Vec<Vec<(GpKernelParams, f64)>> = hyper
        .length_scale
        .values()
        .into_par_iter()
        .map(|l| {
            let unit = GpKernelParams {
                signal_variance: 1.0,
                length_scale: l,
                noise_variance: 0.0,
            };
            let eig = SymmetricEigen::new(kernel_matrix(d2, &unit, 0.0));
            let proj = eig.eigenvectors.transpose() * &yv;
            let mut out = Vec::with_capacity(sv.len() * nv.len());
            for &s in &sv {
                for &v in &nv {
                    let mut quad = 0.0;
                    let mut log_det = 0.0;
                    let mut ok = true;
                    for (lam, q) in eig.eigenvalues.iter().zip(proj.iter()) {
                        let e = s * lam.max(0.0) + v;
                        if e <= 0.0 {
                            ok = false;
                            break;
                        }
                        quad += q * q / e;
                        log_det += e.ln();
                    }
                    let lml = if ok {
                        -0.5 * quad - 0.5 * log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
                    } else {
                        f64::NEG_INFINITY
                    };
                    out.push((
                        GpKernelParams {
                            signal_variance: s,
                            length_scale: l,
                            noise_variance: v,
                        },
                        lml,
                    ));
                }
            }
            out
        })
        .collect();
    per_ls.into_iter().flatten().collect()
}

fn fit_boundary(d2: &DMatrix<f64>, targets: &[f64], hyper: &GpHyper) -> Result<BoundaryGp> {
    let n = targets.len() as f64;
    let target_mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|t| (t - target_mean).powi(2)).sum::<f64>() / n;
    let target_std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    let y: Vec<f64> = targets.iter().map(|t| (t - target_mean) / target_std).collect();

    let scored = grid_search(d2, &y, hyper);
    let mut best = 0;
    for (i, (_, l)) in scored.iter().enumerate() {
        if *l > scored[best].1 {
            best = i;
        }
    }
    let kernel = scored[best].0;
    let scale = kernel.signal_variance + kernel.noise_variance;
    let mut jitter = 0.0;
    loop {
        if let Some((lml, alpha)) = lml_cholesky(d2, &y, &kernel, jitter) {
            return Ok(BoundaryGp {
                kernel,
                alpha,
                target_mean,
                target_std,
                log_marginal_likelihood: lml,
            });
        }
        jitter = if jitter == 0.0 { 1e-10 * scale } else { jitter * 10.0 };
        if jitter > 1e-4 * scale {
            return Err(LearnError::SingularKernel);
        }
    }
}

pub fn train_regressor(
    samples: &[TrainingSample],
    mask: &FeatureMask,
    grid: &BitrateGrid,
    hyper: &GpHyper,
) -> Result<RegressorModel> {
    hyper.validate()?;
    mask.validate()?;
    if samples.len() < 3 {
        return Err(LearnError::TooFewSamples {
            need: 3,
            got: samples.len(),
        });
    }
    check_resolution_sets(samples)?;
    let resolutions = samples[0].gt_ladder.resolutions().clone();
    let masked: Vec<Vec<f64>> = samples.iter().map(|s| mask.apply(&s.features)).collect();
    let standardization = Standardizer::fit(&masked);
    let inputs: Vec<Vec<f64>> = masked.iter().map(|m| standardization.transform(m)).collect();
    let d2 = sq_dist_matrix(&inputs);

    let gps = (0..resolutions.len() - 1)
        .into_par_iter()
        .map(|b| {
            let t: Vec<f64> = samples.iter().map(|s| s.gt_ladder.crossover_log2_rates()[b]).collect();
            fit_boundary(&d2, &t, hyper)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RegressorModel {
        resolutions,
        feature_mask: mask.clone(),
        standardization,
        inputs,
        gps,
        rate_bounds: (grid.min_log2(), grid.max_log2()),
    })
}

/// Posterior mean of boundary `boundary_index` (1-based), unclamped.
pub fn predict_crossover(model: &RegressorModel, features: &FeatureVector, boundary_index: usize) -> Result<f64> {
    if boundary_index == 0 || boundary_index > model.gps.len() {
        return Err(LearnError::BadBoundaryIndex(boundary_index));
    }
    let z = model.standardization.transform(&model.feature_mask.apply(features));
    Ok(posterior_mean(model, &model.gps[boundary_index - 1], &z))
}

fn posterior_mean(model: &RegressorModel, gp: &BoundaryGp, z: &[f64]) -> f64 {
    let k: f64 = model
        .inputs
        .iter()
        .zip(&gp.alpha)
        .map(|(x, a)| gp.kernel.rbf(sq_dist(x, z)) * a)
        .sum();
    gp.target_mean + gp.target_std * k
}

/// All cross-overs, clamped to the rate bounds and sorted.
pub fn regressor_ladder(model: &RegressorModel, features: &FeatureVector) -> BitrateLadder {
    let z = model.standardization.transform(&model.feature_mask.apply(features));
    let raw: Vec<f64> = model.gps.iter().map(|gp| posterior_mean(model, gp, &z)).collect();
    ladder_from_crossovers(&model.resolutions, &raw, model.rate_bounds)
}

pub(crate) fn ladder_from_crossovers(resolutions: &ResolutionSet, raw: &[f64], bounds: (f64, f64)) -> BitrateLadder {
    let mut c: Vec<f64> = raw
        .iter()
        .map(|&v| if v.is_finite() { v.clamp(bounds.0, bounds.1) } else { bounds.0 })
        .collect();
    c.sort_by(f64::total_cmp);
    BitrateLadder::new(resolutions.clone(), c).expect("sorted finite cross-overs")
}

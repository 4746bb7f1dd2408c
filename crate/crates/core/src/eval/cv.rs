//! K-fold cross-validation of the four ladder predictors.

use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bd_br, ladder_accuracy, ladder_rq_points, DatasetEntry, EvalError, Result};
use crate::ensemble::{aggregate, AggregatorConfig, ChunkRef, TableBackend};
use crate::learners::{
    classifier_ladder, regressor_ladder, rfe_select, train_classifier, train_regressor, FeatureMask, LearnerConfig,
    LearnerKind, TrainingSample,
};
use crate::rq::{average_ladder, BitrateLadder};
use crate::video::FEATURE_COUNT;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    /// Features kept by elimination for each learner.
    pub rfe_target_k: usize,
    pub learner: LearnerConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            seed: 2024,
            rfe_target_k: 6,
            learner: LearnerConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Classifier,
    Regressor,
    EnsembleFast,
    EnsembleFull,
}

impl Method {
    pub const ALL: [Method; 4] = [Self::Classifier, Self::Regressor, Self::EnsembleFast, Self::EnsembleFull];

    pub fn name(self) -> &'static str {
        match self {
            Self::Classifier => "classifier",
            Self::Regressor => "regressor",
            Self::EnsembleFast => "ensemble_fast",
            Self::EnsembleFull => "ensemble_full",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: Method,
    pub accuracy: f64,
    pub bdbr_vs_gt: f64,
    pub bdbr_vs_static: f64,
    pub encodes: f64,
    /// Grid points where the two constituents disagreed.
    pub disagreements: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub chunk_id: String,
    pub fold: usize,
    pub method: Method,
    pub accuracy: f64,
    pub bdbr_vs_gt: f64,
    pub bdbr_vs_static: f64,
    pub encodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_ids: Vec<String>,
    pub classifier_mask: FeatureMask,
    pub regressor_mask: FeatureMask,
    pub static_ladder: BitrateLadder,
    /// Accuracy and BD-BR are means over the test sequences; encodes and
    /// disagreements are totals.
    pub metrics: Vec<MethodMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    /// Fold of every dataset entry, in dataset order.
    pub assignments: Vec<usize>,
    pub fold_reports: Vec<FoldReport>,
    /// Mean over folds.
    pub mean: Vec<MethodMetrics>,
    /// Standard error of the fold values.
    pub std_error: Vec<MethodMetrics>,
    pub sequences: Vec<SequenceResult>,
}

impl CvReport {
    pub fn mean_of(&self, m: Method) -> &MethodMetrics {
        self.mean.iter().find(|x| x.method == m).expect("all methods reported")
    }

    pub fn std_error_of(&self, m: Method) -> &MethodMetrics {
        self.std_error.iter().find(|x| x.method == m).expect("all methods reported")
    }

    /// Per-fold values of one metric.
    pub fn fold_values(&self, m: Method, f: impl Fn(&MethodMetrics) -> f64) -> Vec<f64> {
        self.fold_reports
            .iter()
            .map(|r| f(r.metrics.iter().find(|x| x.method == m).expect("all methods reported")))
            .collect()
    }
}

fn assign_folds(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &idx) in order.iter().enumerate() {
        fold[idx] = pos % folds;
    }
    fold
}

pub fn cross_validate(dataset: &[DatasetEntry], cfg: &CvConfig) -> Result<CvReport> {
    if cfg.folds < 2 || dataset.len() < cfg.folds {
        return Err(EvalError::DatasetTooSmall {
            size: dataset.len(),
            folds: cfg.folds,
        });
    }
    let assignments = assign_folds(dataset.len(), cfg.folds, cfg.seed);
    let per_fold: Vec<(FoldReport, Vec<SequenceResult>)> = (0..cfg.folds)
        .into_par_iter()
        .map(|f| run_fold(dataset, &assignments, f, cfg))
        .collect::<Result<_>>()?;

    let (fold_reports, seqs): (Vec<_>, Vec<_>) = per_fold.into_iter().unzip();
    let mut mean = Vec::new();
    let mut std_error = Vec::new();
    for m in Method::ALL {
        let rows: Vec<&MethodMetrics> = fold_reports
            .iter()
            .map(|r| r.metrics.iter().find(|x| x.method == m).expect("all methods reported"))
            .collect();
        let stat = |g: fn(&MethodMetrics) -> f64| -> (f64, f64) {
            let v: Vec<f64> = rows.iter().map(|r| g(r)).collect();
            let n = v.len() as f64;
            let mu = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0).max(1.0);
            (mu, (var / n).sqrt())
        };
        let acc = stat(|r| r.accuracy);
        let gt = stat(|r| r.bdbr_vs_gt);
        let st = stat(|r| r.bdbr_vs_static);
        let enc = stat(|r| r.encodes);
        let dis = stat(|r| r.disagreements);
        mean.push(MethodMetrics {
            method: m,
            accuracy: acc.0,
            bdbr_vs_gt: gt.0,
            bdbr_vs_static: st.0,
            encodes: enc.0,
            disagreements: dis.0,
        });
        std_error.push(MethodMetrics {
            method: m,
            accuracy: acc.1,
            bdbr_vs_gt: gt.1,
            bdbr_vs_static: st.1,
            encodes: enc.1,
            disagreements: dis.1,
        });
    }
    Ok(CvReport {
        folds: cfg.folds,
        seed: cfg.seed,
        assignments,
        fold_reports,
        mean,
        std_error,
        sequences: seqs.into_iter().flatten().collect(),
    })
}

fn select(samples: &[TrainingSample], kind: LearnerKind, cfg: &CvConfig) -> Result<FeatureMask> {
    if cfg.rfe_target_k >= FEATURE_COUNT {
        return Ok(FeatureMask::all());
    }
    Ok(rfe_select(samples, kind, cfg.rfe_target_k, &cfg.learner)?)
}

fn run_fold(
    dataset: &[DatasetEntry],
    assignments: &[usize],
    fold: usize,
    cfg: &CvConfig,
) -> Result<(FoldReport, Vec<SequenceResult>)> {
    let grid = cfg.learner.grid;
    let mut test: Vec<&DatasetEntry> = Vec::new();
    let mut train: Vec<&DatasetEntry> = Vec::new();
    for (e, &a) in dataset.iter().zip(assignments) {
        if a == fold {
            test.push(e);
        } else {
            train.push(e);
        }
    }
    let samples: Vec<TrainingSample> = train
        .iter()
        .map(|e| TrainingSample {
            chunk_id: e.chunk_id.clone(),
            features: e.features,
            gt_ladder: e.gt_ladder.clone(),
        })
        .collect();

    let cl_mask = select(&samples, LearnerKind::Classifier, cfg)?;
    let rg_mask = select(&samples, LearnerKind::Regressor, cfg)?;
    let cl = train_classifier(&samples, &cl_mask, &grid, &cfg.learner.gbt)?;
    let rg = train_regressor(&samples, &rg_mask, &grid, &cfg.learner.gp)?;
    let gt_ladders: Vec<BitrateLadder> = train.iter().map(|e| e.gt_ladder.clone()).collect();
    let static_ladder = average_ladder(&gt_ladders)?;

    let mut seqs = Vec::with_capacity(test.len() * Method::ALL.len());
    let mut disagreements = 0usize;
    for e in &test {
        let wrap = |source: EvalError| EvalError::Sequence {
            chunk: e.chunk_id.clone(),
            source: Box::new(source),
        };
        let backend = TableBackend::for_grid(e.surface.clone(), &grid);
        let chunk = ChunkRef::new(e.chunk_id.clone());
        let l_cl = classifier_ladder(&cl, &e.features, &grid);
        let l_rg = regressor_ladder(&rg, &e.features);
        let fast = aggregate(&l_cl, &l_rg, &backend, &chunk, &AggregatorConfig { is_fast: true, grid })
            .map_err(|x| wrap(x.into()))?;
        let full = aggregate(&l_cl, &l_rg, &backend, &chunk, &AggregatorConfig { is_fast: false, grid })
            .map_err(|x| wrap(x.into()))?;
        disagreements += fast.disagreements();

        let gt_pts = ladder_rq_points(&e.gt_ladder, &backend, &chunk, &grid).map_err(|x| wrap(x.into()))?;
        let st_pts = ladder_rq_points(&static_ladder, &backend, &chunk, &grid).map_err(|x| wrap(x.into()))?;
        for (method, ladder, encodes) in [
            (Method::Classifier, &l_cl, 0),
            (Method::Regressor, &l_rg, 0),
            (Method::EnsembleFast, &fast.ladder, fast.total_encodes),
            (Method::EnsembleFull, &full.ladder, full.total_encodes),
        ] {
            let pts = ladder_rq_points(ladder, &backend, &chunk, &grid).map_err(|x| wrap(x.into()))?;
            seqs.push(SequenceResult {
                chunk_id: e.chunk_id.clone(),
                fold,
                method,
                accuracy: ladder_accuracy(ladder, &e.gt_ladder, &grid).map_err(wrap)?,
                bdbr_vs_gt: bd_br(&gt_pts, &pts).map_err(wrap)?.percent,
                bdbr_vs_static: bd_br(&st_pts, &pts).map_err(wrap)?.percent,
                encodes,
            });
        }
    }

    let n = test.len() as f64;
    let metrics = Method::ALL
        .iter()
        .map(|&m| {
            let rows: Vec<&SequenceResult> = seqs.iter().filter(|s| s.method == m).collect();
            MethodMetrics {
                method: m,
                accuracy: rows.iter().map(|r| r.accuracy).sum::<f64>() / n,
                bdbr_vs_gt: rows.iter().map(|r| r.bdbr_vs_gt).sum::<f64>() / n,
                bdbr_vs_static: rows.iter().map(|r| r.bdbr_vs_static).sum::<f64>() / n,
                encodes: rows.iter().map(|r| r.encodes).sum::<usize>() as f64,
                disagreements: disagreements as f64,
            }
        })
        .collect();
    log::info!("fold {fold}: {} train, {} test", train.len(), test.len());
    Ok((
        FoldReport {
            fold,
            test_ids: test.iter().map(|e| e.chunk_id.clone()).collect(),
            classifier_mask: cl_mask,
            regressor_mask: rg_mask,
            static_ladder,
            metrics,
        },
        seqs,
    ))
}

/// `fold,method,accuracy,bdbr_vs_gt,bdbr_vs_static,encodes`, one row per fold
/// and method followed by `mean` rows.
pub fn write_cv_csv<W: Write>(report: &CvReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["fold", "method", "accuracy", "bdbr_vs_gt", "bdbr_vs_static", "encodes"])?;
    let rows = report
        .fold_reports
        .iter()
        .flat_map(|r| r.metrics.iter().map(move |m| (r.fold.to_string(), m)))
        .chain(report.mean.iter().map(|m| ("mean".to_string(), m)));
    for (fold, m) in rows {
        w.write_record([
            fold,
            m.method.to_string(),
            m.accuracy.to_string(),
            m.bdbr_vs_gt.to_string(),
            m.bdbr_vs_static.to_string(),
            m.encodes.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Per-sequence BD-BR rows, ready for histograms.
pub fn write_sequence_csv<W: Write>(report: &CvReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in &report.sequences {
        w.serialize(s)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

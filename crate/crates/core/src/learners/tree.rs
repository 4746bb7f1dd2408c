//! Histogram-binned least-squares regression trees, the boosting base learner.

use serde::{Deserialize, Serialize};

/// Column-major feature matrix quantized into at most `max_bins` bins per
/// column. A row goes left at bin `b` when its raw value is `<= thresholds[b]`.
pub(crate) struct BinnedMatrix {
    bins: Vec<Vec<u8>>,
    thresholds: Vec<Vec<f64>>,
}

impl BinnedMatrix {
    pub fn new(rows: &[Vec<f64>], max_bins: usize) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        let max_bins = max_bins.clamp(2, 256);
        let mut bins = Vec::with_capacity(n_cols);
        let mut thresholds = Vec::with_capacity(n_cols);
        for j in 0..n_cols {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let cuts: Vec<f64> = if vals.len() <= max_bins {
                vals.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
            } else {
                let mut c: Vec<f64> = (1..max_bins)
                    .map(|b| {
                        let k = b * vals.len() / max_bins;
                        0.5 * (vals[k - 1] + vals[k])
                    })
                    .collect();
                c.dedup();
                c
            };
            bins.push(
                rows.iter()
                    .map(|r| cuts.partition_point(|&t| t < r[j]) as u8)
                    .collect(),
            );
            thresholds.push(cuts);
        }
        Self { bins, thresholds }
    }

    #[cfg(test)]
    pub fn n_rows(&self) -> usize {
        self.bins.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.bins.len()
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// A single leaf.
    pub fn constant(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Same as [`predict`](Self::predict) for row `i` of the matrix the tree
    /// was grown on.
    pub(crate) fn predict_binned(&self, data: &BinnedMatrix, i: usize) -> f64 {
        let mut n = 0;
        loop {
            match self.nodes[n] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let b = data.bins[feature][i] as usize;
                    let cuts = &data.thresholds[feature];
                    n = if b < cuts.len() && cuts[b] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }

    /// Fits `grad` by least squares over `rows`; leaves take
    /// `leaf(sum_grad, sum_hess)`. Split gains are added to `gains` per column.
    pub(crate) fn fit(
        data: &BinnedMatrix,
        rows: &[usize],
        grad: &[f64],
        hess: &[f64],
        params: TreeParams,
        leaf: &dyn Fn(f64, f64) -> f64,
        gains: &mut [f64],
    ) -> Self {
        let mut tree = Self { nodes: Vec::new() };
        let mut rows = rows.to_vec();
        tree.grow(data, &mut rows, grad, hess, params, leaf, gains, 0);
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &mut self,
        data: &BinnedMatrix,
        rows: &mut [usize],
        grad: &[f64],
        hess: &[f64],
        params: TreeParams,
        leaf: &dyn Fn(f64, f64) -> f64,
        gains: &mut [f64],
        depth: usize,
    ) -> usize {
        let id = self.nodes.len();
        let sum_g: f64 = rows.iter().map(|&r| grad[r]).sum();
        let sum_h: f64 = rows.iter().map(|&r| hess[r]).sum();
        self.nodes.push(Node::Leaf {
            value: leaf(sum_g, sum_h),
        });
        if depth >= params.max_depth || rows.len() < 2 * params.min_leaf.max(1) {
            return id;
        }
        let Some(best) = best_split(data, rows, grad, sum_g, params.min_leaf) else {
            return id;
        };
        gains[best.feature] += best.gain;
        let col = &data.bins[best.feature];
        // stable partition keeps child row order deterministic
        let (mut l, mut r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| col[i] as usize <= best.bin);
        let left = self.grow(data, &mut l, grad, hess, params, leaf, gains, depth + 1);
        let right = self.grow(data, &mut r, grad, hess, params, leaf, gains, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: data.thresholds[best.feature][best.bin],
            left,
            right,
        };
        id
    }
}

struct SplitCandidate {
    feature: usize,
    bin: usize,
    gain: f64,
}

fn best_split(
    data: &BinnedMatrix,
    rows: &[usize],
    grad: &[f64],
    sum_g: f64,
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let n = rows.len();
    let parent = sum_g * sum_g / n as f64;
    let mut best: Option<SplitCandidate> = None;
    let mut hist_g = [0.0f64; 256];
    let mut hist_n = [0usize; 256];
    for (f, col) in data.bins.iter().enumerate() {
        let n_cuts = data.thresholds[f].len();
        if n_cuts == 0 {
            continue;
        }
        hist_g[..=n_cuts].fill(0.0);
        hist_n[..=n_cuts].fill(0);
        for &r in rows {
            let b = col[r] as usize;
            hist_g[b] += grad[r];
            hist_n[b] += 1;
        }
        let (mut gl, mut nl) = (0.0, 0usize);
        for b in 0..n_cuts {
            gl += hist_g[b];
            nl += hist_n[b];
            let nr = n - nl;
            if nl < min_leaf.max(1) {
                continue;
            }
            if nr < min_leaf.max(1) {
                break;
            }
            let gr = sum_g - gl;
            let gain = gl * gl / nl as f64 + gr * gr / nr as f64 - parent;
            if gain > 1e-12 && best.as_ref().is_none_or(|c| gain > c.gain) {
                best = Some(SplitCandidate { feature: f, bin: b, gain });
            }
        }
    }
    best
}

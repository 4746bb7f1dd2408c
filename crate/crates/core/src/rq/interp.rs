//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes).
//!
//! Used for the continuous view of rate–quality curves and, with the axes
//! swapped, for BD-BR integration of log-rate over quality.

use serde::{Deserialize, Serialize};

/// Shape-preserving cubic interpolant over strictly increasing knots.
///
/// Outside `[xs[0], xs[n-1]]` the interpolant is flat (clamped to the
/// endpoint value).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Returns `None` when fewer than two knots are given, the lengths differ,
    /// a value is non-finite, or `xs` is not strictly increasing.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Option<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return None;
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        let slopes = fritsch_carlson_slopes(&xs, &ys);
        Some(Self { xs, ys, slopes })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.segment(x);
        self.eval_segment(k, x)
    }

    /// Exact integral of the interpolant over `[a, b]` (flat parts included).
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integrate(b, a);
        }
        let n = self.xs.len();
        let mut total = 0.0;
        // flat extrapolation on the left
        if a < self.xs[0] {
            let hi = b.min(self.xs[0]);
            total += self.ys[0] * (hi - a);
        }
        // flat extrapolation on the right
        if b > self.xs[n - 1] {
            let lo = a.max(self.xs[n - 1]);
            total += self.ys[n - 1] * (b - lo);
        }
        for k in 0..n - 1 {
            let lo = a.max(self.xs[k]);
            let hi = b.min(self.xs[k + 1]);
            if hi <= lo {
                continue;
            }
            // Two-point Gauss–Legendre is exact for cubics.
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let off = half / 3f64.sqrt();
            total += half * (self.eval_segment(k, mid - off) + self.eval_segment(k, mid + off));
        }
        total
    }

    fn segment(&self, x: f64) -> usize {
        // index k with xs[k] <= x < xs[k+1]
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i - 1,
        }
    }

    fn eval_segment(&self, k: usize, x: f64) -> f64 {
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

fn fritsch_carlson_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for k in 1..n - 1 {
        let (s1, s2) = (delta[k - 1], delta[k]);
        if s1 == 0.0 || s2 == 0.0 || s1.signum() != s2.signum() {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / s1 + w2 / s2);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

// Three-point one-sided estimate, limited to keep the end segment monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

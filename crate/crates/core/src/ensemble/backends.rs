use serde::{Deserialize, Serialize};

use super::{Capability, ChunkRef, EncodeError, EncoderBackend, Memo, Result};
use crate::rq::{build_curve, BitrateGrid, RateQualitySurface, Resolution, ResolutionSet, RqPoint};

/// Serves qualities from a measured surface.
#[derive(Debug)]
pub struct TableBackend {
    surface: RateQualitySurface,
    capability: Capability,
    memo: Memo,
}

impl TableBackend {
    pub fn new(surface: RateQualitySurface, min_log2_rate: f64, max_log2_rate: f64) -> Self {
        let capability = Capability {
            resolutions: surface.resolutions().clone(),
            min_log2_rate,
            max_log2_rate,
        };
        Self {
            surface,
            capability,
            memo: Memo::default(),
        }
    }

    pub fn for_grid(surface: RateQualitySurface, grid: &BitrateGrid) -> Self {
        Self::new(surface, grid.min_log2(), grid.max_log2())
    }

    pub fn surface(&self) -> &RateQualitySurface {
        &self.surface
    }

    /// Distinct queries answered so far.
    pub fn distinct_queries(&self) -> usize {
        self.memo.len()
    }
}

impl EncoderBackend for TableBackend {
    fn capability(&self) -> &Capability {
        &self.capability
    }

    fn encode_quality(&self, chunk: &ChunkRef, log2_rate: f64, resolution: &Resolution) -> Result<f64> {
        self.capability.check(log2_rate, resolution)?;
        self.memo.get_or_try(chunk, log2_rate, resolution, || {
            let curve = self.surface.curve(resolution.index).expect("checked above");
            Ok(curve.interp_quality(log2_rate))
        })
    }
}

/// Saturating curves `U_s * (1 - exp(-k_s * max(0, x - o_s)))` in log2 rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub ceiling: Vec<f64>,
    pub steepness: Vec<f64>,
    pub onset: Vec<f64>,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            ceiling: vec![38.0, 42.0, 46.0, 50.0],
            steepness: vec![1.2, 1.0, 0.8, 0.6],
            onset: vec![5.0, 6.0, 7.0, 8.0],
        }
    }
}

impl SyntheticParams {
    pub fn len(&self) -> usize {
        self.ceiling.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ceiling.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ceiling.len();
        if n < 2 || self.steepness.len() != n || self.onset.len() != n {
            return Err(EncodeError::BadParams(
                "need at least two resolutions with matching parameter lengths".into(),
            ));
        }
        let all = self.ceiling.iter().chain(&self.steepness).chain(&self.onset);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(EncodeError::BadParams("parameters must be finite".into()));
        }
        if self.ceiling.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EncodeError::BadParams("ceilings must be strictly increasing".into()));
        }
        if self.onset.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EncodeError::BadParams("onsets must be strictly increasing".into()));
        }
        if self.steepness.iter().any(|&k| k <= 0.0) {
            return Err(EncodeError::BadParams("steepness must be positive".into()));
        }
        Ok(())
    }

    /// Quality of resolution `index` (1-based) at `log2_rate`.
    pub fn quality(&self, index: usize, log2_rate: f64) -> f64 {
        let i = index - 1;
        self.ceiling[i] * (1.0 - (-self.steepness[i] * (log2_rate - self.onset[i]).max(0.0)).exp())
    }

    /// Samples every curve at the grid rates.
    pub fn tabulate(&self, resolutions: &ResolutionSet, grid: &BitrateGrid) -> crate::rq::Result<RateQualitySurface> {
        let rates = grid.values();
        let curves = resolutions
            .iter()
            .map(|r| {
                let pts: Vec<RqPoint> = rates.iter().map(|&x| RqPoint::new(x, self.quality(r.index, x))).collect();
                build_curve(r.clone(), &pts)
            })
            .collect::<crate::rq::Result<Vec<_>>>()?;
        RateQualitySurface::new(resolutions.clone(), curves)
    }
}

#[derive(Debug)]
pub struct SyntheticBackend {
    params: SyntheticParams,
    capability: Capability,
    memo: Memo,
}

impl SyntheticBackend {
    pub const DEFAULT_RATE_RANGE: (f64, f64) = (0.0, 32.0);

    pub fn new(params: SyntheticParams, resolutions: ResolutionSet) -> Result<Self> {
        params.validate()?;
        if resolutions.len() != params.len() {
            return Err(EncodeError::BadParams(format!(
                "{} parameter sets for {} resolutions",
                params.len(),
                resolutions.len()
            )));
        }
        Ok(Self {
            params,
            capability: Capability {
                resolutions,
                min_log2_rate: Self::DEFAULT_RATE_RANGE.0,
                max_log2_rate: Self::DEFAULT_RATE_RANGE.1,
            },
            memo: Memo::default(),
        })
    }

    pub fn params(&self) -> &SyntheticParams {
        &self.params
    }
}

/// Synthetic backend over the default four UHD-ladder resolutions.
pub fn make_synthetic_backend(params: SyntheticParams) -> Result<SyntheticBackend> {
    SyntheticBackend::new(params, ResolutionSet::uhd_default())
}

impl EncoderBackend for SyntheticBackend {
    fn capability(&self) -> &Capability {
        &self.capability
    }

    fn encode_quality(&self, chunk: &ChunkRef, log2_rate: f64, resolution: &Resolution) -> Result<f64> {
        self.capability.check(log2_rate, resolution)?;
        self.memo
            .get_or_try(chunk, log2_rate, resolution, || Ok(self.params.quality(resolution.index, log2_rate)))
    }
}

//! Detection parameters and the single detection path used by both the
//! `detect` subcommand and `POST /api/detect`.

use padkit::{detect, fit, DetectionResult, DetectorModel, FitConfig, KernelMethod, Region, TimeSeries};
use serde::Serialize;

use crate::error::{AppError, AppResult};

pub const DEFAULT_DELTA: f64 = 1.0;
pub const DEFAULT_METHOD: KernelMethod = KernelMethod::Ipm;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectParams {
    pub lag: usize,
    pub train_len: usize,
    /// Defaults to the series length.
    pub scan_len: Option<usize>,
    pub delta: f64,
    /// Residual tolerance; `None` accepts any residual.
    pub nu: Option<f64>,
    pub method: KernelMethod,
    pub seed: u64,
}

impl DetectParams {
    pub fn new(lag: usize, train_len: usize) -> Self {
        Self {
            lag,
            train_len,
            scan_len: None,
            delta: DEFAULT_DELTA,
            nu: None,
            method: DEFAULT_METHOD,
            seed: 0,
        }
    }

    /// Checks every parameter against a series of length `len` and returns
    /// the resolved scan length.
    pub fn validate(&self, len: usize) -> AppResult<usize> {
        check_shape(self.lag, self.train_len, len)?;
        let l = self.lag;
        let n = self.scan_len.unwrap_or(len);
        if n < l + 1 || n > len {
            return Err(AppError::validation(
                "N",
                format!("N ({n}) must satisfy L+1 = {} <= N <= {len}", l + 1),
            ));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(AppError::validation("delta", format!("delta ({}) must be positive and finite", self.delta)));
        }
        if let Some(nu) = self.nu {
            if nu.is_nan() || nu <= 0.0 {
                return Err(AppError::validation("nu", format!("nu ({nu}) must be positive")));
            }
        }
        Ok(n)
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig::new(self.lag, self.train_len, self.method)
            .delta(self.delta)
            .nu(self.nu.unwrap_or(f64::INFINITY))
            .seed(self.seed)
    }
}

/// `1 <= L < S <= len`.
pub fn check_shape(l: usize, s: usize, len: usize) -> AppResult<()> {
    if l < 1 {
        return Err(AppError::validation("L", "L must be at least 1"));
    }
    if l >= s {
        return Err(AppError::validation("L", format!("L ({l}) must be smaller than S ({s})")));
    }
    if s > len {
        return Err(AppError::validation("S", format!("S ({s}) exceeds the series length ({len})")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DetectOutcome {
    pub model: DetectorModel,
    pub result: DetectionResult,
}

pub fn run_detect(series: &TimeSeries, params: &DetectParams) -> AppResult<DetectOutcome> {
    let scan_len = params.validate(series.len())?;
    let model = fit(series, &params.fit_config())?;
    let result = detect(&model, series, scan_len)?;
    Ok(DetectOutcome { model, result })
}

/// Response body of `POST /api/detect`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectResponse {
    pub flags: Vec<u8>,
    pub regions: Vec<Region>,
    /// `|pᵀ x_L(j)|` for `j = L..=N`.
    pub scores: Vec<f64>,
    pub warm_up: usize,
    pub degraded: bool,
    pub residual: f64,
}

impl From<DetectOutcome> for DetectResponse {
    fn from(o: DetectOutcome) -> Self {
        Self {
            degraded: o.model.degraded(),
            residual: o.model.achieved_residual(),
            flags: o.result.flags,
            regions: o.result.regions,
            scores: o.result.scores,
            warm_up: o.result.warm_up,
        }
    }
}

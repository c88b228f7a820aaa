//! Time series containers and the elementary constructions built on them:
//! lag vectors, Hankel trajectory matrices, the step threshold and the
//! Hadamard product.
//!
//! Sample indices in this module's public API are **1-based**: `t` names the
//! sample `x_t`, and a lag vector `x_L(t)` ends at sample `t`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PadError, Result};

/// An ordered, finite, non-empty real sample `{x_t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_period: Option<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(PadError::EmptySeries);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(PadError::NonFiniteSample { index: index + 1 });
        }
        Ok(Self { values, sample_period: None })
    }

    /// Attaches a sampling period in seconds. Metadata only.
    pub fn with_sample_period(mut self, seconds: f64) -> Result<Self> {
        if !(seconds.is_finite() && seconds > 0.0) {
            return Err(PadError::param("sample_period", "must be a positive finite number"));
        }
        self.sample_period = Some(seconds);
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_period(&self) -> Option<f64> {
        self.sample_period
    }

    /// The first `n` samples `[x_1, ..., x_n]`.
    pub fn prefix(&self, n: usize) -> Result<&[f64]> {
        if n == 0 || n > self.len() {
            return Err(PadError::InvalidShape(format!(
                "prefix length {n} not in [1, {}]",
                self.len()
            )));
        }
        Ok(&self.values[..n])
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = Self::new(self.values.iter().map(|v| v * factor).collect())?;
        out.sample_period = self.sample_period;
        Ok(out)
    }

    /// Borrowed window `x_{t-L+1..=t}` without bounds validation beyond slicing.
    pub(crate) fn window(&self, lag: usize, t: usize) -> &[f64] {
        &self.values[t - lag..t]
    }
}

/// The window of `lag` consecutive samples ending at sample `t` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct LagVector {
    pub entries: DVector<f64>,
    pub lag: usize,
    pub t: usize,
}

/// `L x M` Hankel matrix whose column `j` (1-based) is `x_L(L + j - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix {
    data: DMatrix<f64>,
    lag: usize,
}

impl TrajectoryMatrix {
    /// Wraps an arbitrary dense matrix. Used by tests and by callers that
    /// already hold a trajectory matrix; the Hankel structure is not checked.
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(PadError::InvalidShape("empty matrix".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(PadError::InvalidShape("matrix has non-finite entries".into()));
        }
        let lag = data.nrows();
        Ok(Self { data, lag })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Column count `M = S - L + 1`.
    pub fn columns(&self) -> usize {
        self.data.ncols()
    }

    /// True when every anti-diagonal is constant.
    pub fn is_hankel(&self) -> bool {
        let (rows, cols) = self.data.shape();
        (0..rows.saturating_sub(1))
            .all(|i| (0..cols - 1).all(|j| self.data[(i + 1, j)] == self.data[(i, j + 1)]))
    }
}

pub fn lag_vector(series: &TimeSeries, lag: usize, t: usize) -> Result<LagVector> {
    if lag < 1 {
        return Err(PadError::InvalidLag(lag));
    }
    if t < lag || t > series.len() {
        return Err(PadError::IndexOutOfRange { t, lag, len: series.len() });
    }
    Ok(LagVector {
        entries: DVector::from_column_slice(series.window(lag, t)),
        lag,
        t,
    })
}

/// Hankel trajectory matrix of the first `train_len` samples.
pub fn build_trajectory(series: &TimeSeries, lag: usize, train_len: usize) -> Result<TrajectoryMatrix> {
    if lag < 1 {
        return Err(PadError::InvalidLag(lag));
    }
    if lag >= train_len {
        return Err(PadError::InvalidShape(format!(
            "L={lag} must be smaller than S={train_len}"
        )));
    }
    if train_len > series.len() {
        return Err(PadError::InvalidShape(format!(
            "S={train_len} exceeds series length {}",
            series.len()
        )));
    }
    let x = series.values();
    let cols = train_len - lag + 1;
    let data = DMatrix::from_fn(lag, cols, |i, j| x[i + j]);
    Ok(TrajectoryMatrix { data, lag })
}

/// `H_delta(x)`: 1 when `x > delta`, else 0.
#[inline]
pub fn step_threshold(x: f64, delta: f64) -> u8 {
    u8::from(x > delta)
}

pub fn hadamard(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(PadError::ShapeMismatch { left: x.len(), right: y.len() });
    }
    Ok(x.iter().zip(y).map(|(a, b)| a * b).collect())
}

//! Projective subspace anomaly detection for univariate time series.
//!
//! A detector is fitted on the first `S` samples of a series: their `L x M`
//! Hankel trajectory matrix `H` is built, and a unit vector `p` with small
//! `‖Hᵀp‖₂` (an approximate left-kernel vector) is extracted. Lag vectors
//! that lie in the column space of `H` are nearly orthogonal to `p`, so a
//! large `|pᵀ x_L(t)|` marks `x_t` as anomalous.
//!
//! ```
//! use padkit::{detect, fit, FitConfig, KernelMethod, TimeSeries};
//!
//! let values: Vec<f64> = (1..=400).map(|t| (t as f64 * 0.2).sin()).collect();
//! let series = TimeSeries::new(values).unwrap();
//! let model = fit(&series, &FitConfig::new(10, 200, KernelMethod::SvdDirect).delta(0.5)).unwrap();
//! let result = detect(&model, &series, series.len()).unwrap();
//! assert!(result.regions.is_empty());
//! ```

pub mod bench;
pub mod calibration;
pub mod detector;
mod error;
pub mod series;
pub mod signals;
pub mod spectral;

pub use detector::{detect, fadf, fit, flagged_regions, DetectionResult, DetectorModel, FitConfig, Region};
pub use error::{PadError, Result};
pub use series::{build_trajectory, hadamard, lag_vector, step_threshold, LagVector, TimeSeries, TrajectoryMatrix};
pub use spectral::{kernel_vector, KernelMethod, KernelOptions, SpectralResult};

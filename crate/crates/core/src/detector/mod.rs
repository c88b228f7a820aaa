//! The projective anomaly detector: fit a kernel vector `p` of the training
//! trajectory matrix, then flag every index `j >= L` whose lag vector has
//! `|pᵀ x_L(j)| > delta`.
//!
//! Indices in [`DetectionResult`] are 1-based. Indices `j < L` have no full
//! lag window; they are never flagged and carry no score.

mod certify;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{PadError, Result};
use crate::series::{build_trajectory, hadamard, step_threshold, LagVector, TimeSeries};
use crate::spectral::{kernel_vector, IpmStart, KernelMethod, KernelOptions};

pub use certify::{certify_bound, BoundCertificate, BoundReport};

/// Inclusive, 1-based index interval.
pub type Region = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Lag `L`.
    pub lag: usize,
    /// Training length `S`.
    pub train_len: usize,
    /// FADF threshold `delta`.
    pub delta: f64,
    /// Kernel residual tolerance `nu`.
    pub nu: f64,
    pub method: KernelMethod,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub ipm_start: IpmStart,
}

impl FitConfig {
    pub fn new(lag: usize, train_len: usize, method: KernelMethod) -> Self {
        Self {
            lag,
            train_len,
            delta: 1.0,
            nu: f64::INFINITY,
            method,
            tol: 1e-10,
            max_iter: 200,
            seed: 0,
            ipm_start: IpmStart::Subspace,
        }
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A fitted detector. Immutable; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    p: DVector<f64>,
    lag: usize,
    delta: f64,
    nu: f64,
    achieved_residual: f64,
    method: KernelMethod,
    train_len: usize,
}

impl DetectorModel {
    pub fn p(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `‖Hᵀp‖₂` on the training trajectory matrix.
    pub fn achieved_residual(&self) -> f64 {
        self.achieved_residual
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    pub fn train_len(&self) -> usize {
        self.train_len
    }

    /// `p` is outside `ker_nu(Hᵀ)`.
    pub fn degraded(&self) -> bool {
        self.achieved_residual > self.nu
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        self.delta = delta;
        Ok(self)
    }

    /// Same model with `p` replaced by `-p`.
    pub fn negated(mut self) -> Self {
        self.p.neg_mut();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    /// `d(Σ)` over indices `1..=N`.
    pub flags: Vec<u8>,
    /// `a(Σ) = d ⊙ [x_1, ..., x_N]`.
    pub masked: Vec<f64>,
    /// Maximal runs of flagged indices.
    pub regions: Vec<Region>,
    /// `|pᵀ x_L(j)|` for `j = L..=N`.
    pub scores: Vec<f64>,
    /// First index that is evaluated (`L`).
    pub warm_up: usize,
    pub scan_len: usize,
}

impl DetectionResult {
    pub fn flag_count(&self) -> usize {
        self.flags.iter().map(|&f| usize::from(f)).sum()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(PadError::param("delta", "must be positive and finite"))
    }
}

/// `phi_delta(p, x) = H_delta(|pᵀ x_L(t)|)`.
pub fn fadf(p: &DVector<f64>, x: &LagVector, delta: f64) -> Result<u8> {
    if p.len() != x.entries.len() {
        return Err(PadError::ShapeMismatch { left: p.len(), right: x.entries.len() });
    }
    Ok(step_threshold(p.dot(&x.entries).abs(), delta))
}

/// Steps 0-2: trajectory matrix of the first `S` samples and its kernel vector.
pub fn fit(series: &TimeSeries, cfg: &FitConfig) -> Result<DetectorModel> {
    check_delta(cfg.delta)?;
    let h = build_trajectory(series, cfg.lag, cfg.train_len)?;
    let opts = KernelOptions {
        nu: cfg.nu,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        seed: cfg.seed,
        ipm_start: cfg.ipm_start,
    };
    let k = kernel_vector(&h, cfg.method, &opts)?;
    Ok(DetectorModel {
        p: k.vector,
        lag: cfg.lag,
        delta: cfg.delta,
        nu: cfg.nu,
        achieved_residual: k.value,
        method: cfg.method,
        train_len: cfg.train_len,
    })
}

fn check_scan(model: &DetectorModel, series: &TimeSeries, scan_len: usize) -> Result<()> {
    if scan_len < model.lag + 1 || scan_len > series.len() {
        return Err(PadError::InvalidShape(format!(
            "N={scan_len} must satisfy L+1={} <= N <= {}",
            model.lag + 1,
            series.len()
        )));
    }
    Ok(())
}

/// `|pᵀ x_L(j)|` for `j = L..=N`.
pub fn scores(model: &DetectorModel, series: &TimeSeries, scan_len: usize) -> Result<Vec<f64>> {
    check_scan(model, series, scan_len)?;
    let p = model.p.as_slice();
    Ok((model.lag..=scan_len)
        .map(|t| {
            series
                .window(model.lag, t)
                .iter()
                .zip(p)
                .map(|(x, q)| x * q)
                .sum::<f64>()
                .abs()
        })
        .collect())
}

/// Step 3: flags, masked values and flagged regions over `1..=N`.
pub fn detect(model: &DetectorModel, series: &TimeSeries, scan_len: usize) -> Result<DetectionResult> {
    let s = scores(model, series, scan_len)?;
    from_scores(series, model.lag, scan_len, s, model.delta)
}

/// Thresholds precomputed scores. `scores[k]` belongs to index `lag + k`.
pub(crate) fn from_scores(
    series: &TimeSeries,
    lag: usize,
    scan_len: usize,
    scores: Vec<f64>,
    delta: f64,
) -> Result<DetectionResult> {
    check_delta(delta)?;
    let mut flags = vec![0u8; scan_len];
    for (k, &score) in scores.iter().enumerate() {
        flags[lag - 1 + k] = step_threshold(score, delta);
    }
    let flag_values: Vec<f64> = flags.iter().map(|&f| f64::from(f)).collect();
    let masked = hadamard(&flag_values, series.prefix(scan_len)?)?;
    let regions = flagged_regions(&flags);
    Ok(DetectionResult { flags, masked, regions, scores, warm_up: lag, scan_len })
}

/// Maximal runs of consecutive ones, as 1-based inclusive intervals.
pub fn flagged_regions(flags: &[u8]) -> Vec<Region> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().enumerate() {
        match (f != 0, start) {
            (true, None) => start = Some(i + 1),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, flags.len()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::lag_vector;
    use proptest::prelude::*;

    fn periodic(n: usize, period: f64) -> TimeSeries {
        let v = (1..=n)
            .map(|t| {
                let w = std::f64::consts::TAU * t as f64 / period;
                w.sin() + 0.4 * (2.0 * w).cos()
            })
            .collect();
        TimeSeries::new(v).unwrap()
    }

    #[test]
    fn fadf_examples() {
        let x = LagVector { entries: DVector::from_vec(vec![0.0, 2.0]), lag: 2, t: 2 };
        let orth = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(fadf(&orth, &x, 1e-9).unwrap(), 0);
        let along = x.entries.normalize();
        assert_eq!(fadf(&along, &x, 1.0).unwrap(), 1);
        assert_eq!(fadf(&along, &x, 2.0).unwrap(), 0);
        assert!(fadf(&DVector::from_vec(vec![1.0]), &x, 1.0).is_err());
    }

    #[test]
    fn flagged_regions_examples() {
        assert!(flagged_regions(&[0, 0, 0]).is_empty());
        assert_eq!(flagged_regions(&[0, 1, 1, 0, 1]), vec![(2, 3), (5, 5)]);
        assert_eq!(flagged_regions(&[1; 6]), vec![(1, 6)]);
        assert!(flagged_regions(&[]).is_empty());
    }

    #[test]
    fn constant_series_fit_has_exact_kernel() {
        let s = TimeSeries::new(vec![3.0; 50]).unwrap();
        for m in KernelMethod::ALL {
            let model = fit(&s, &FitConfig::new(5, 40, m)).unwrap();
            assert!(model.achieved_residual() <= 1e-10, "{m}: {}", model.achieved_residual());
            let ones = DVector::from_element(5, 1.0).normalize();
            assert!(model.p().dot(&ones).abs() < 1e-10);
            assert!((model.p().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_in_sample_is_clean() {
        let s = periodic(600, 25.0);
        let model = fit(&s, &FitConfig::new(20, 300, KernelMethod::SvdDirect).delta(1e-6)).unwrap();
        let r = detect(&model, &s, 600).unwrap();
        assert_eq!(r.flag_count(), 0);
        assert!(r.regions.is_empty());
        assert_eq!(r.scores.len(), 600 - 20 + 1);
    }

    #[test]
    fn detect_layout() {
        let mut v: Vec<f64> = periodic(400, 20.0).values().to_vec();
        v[349] += 5.0;
        let s = TimeSeries::new(v).unwrap();
        let model = fit(&s, &FitConfig::new(10, 200, KernelMethod::SymmetricEig).delta(0.1)).unwrap();
        let r = detect(&model, &s, 400).unwrap();
        assert_eq!(r.flags.len(), 400);
        assert!(r.flags[..9].iter().all(|&f| f == 0));
        assert_eq!(r.warm_up, 10);
        for (i, (&f, &m)) in r.flags.iter().zip(&r.masked).enumerate() {
            assert_eq!(m, f64::from(f) * s.values()[i]);
        }
        assert!(r.regions.iter().any(|&(a, b)| a <= 350 && 350 <= b));
        for (k, &score) in r.scores.iter().enumerate() {
            let t = k + 10;
            let lv = lag_vector(&s, 10, t).unwrap();
            assert!((score - model.p().dot(&lv.entries).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn scan_length_validation() {
        let s = periodic(100, 10.0);
        let model = fit(&s, &FitConfig::new(10, 50, KernelMethod::SvdDirect)).unwrap();
        assert!(detect(&model, &s, 10).is_err());
        assert!(detect(&model, &s, 101).is_err());
        assert!(detect(&model, &s, 11).is_ok());
        assert!(fit(&s, &FitConfig::new(10, 50, KernelMethod::SvdDirect).delta(0.0)).is_err());
    }

    #[test]
    fn rank_deficient_training_is_sound() {
        // Three sinusoids: rank 6 Hankel, L = 12 leaves an exact kernel.
        let v: Vec<f64> = (1..=300)
            .map(|t| {
                let t = t as f64;
                (0.3 * t).sin() + 0.5 * (0.71 * t).cos() + 0.2 * (1.3 * t + 0.4).sin()
            })
            .collect();
        let s = TimeSeries::new(v).unwrap();
        let model = fit(&s, &FitConfig::new(12, 200, KernelMethod::SvdDirect).delta(1e-8)).unwrap();
        let r = detect(&model, &s, 200).unwrap();
        assert_eq!(r.flag_count(), 0);
        assert!(r.scores.iter().all(|&x| x < 1e-9));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn sign_and_scale_invariance(
            noise in prop::collection::vec(-1.0f64..1.0, 160),
            delta in 0.01f64..2.0,
            c in 0.1f64..10.0,
        ) {
            let base = periodic(160, 13.0);
            let v: Vec<f64> = base.values().iter().zip(&noise).enumerate()
                .map(|(i, (x, n))| if i > 100 { x + n } else { *x })
                .collect();
            let s = TimeSeries::new(v).unwrap();
            let model = fit(&s, &FitConfig::new(8, 80, KernelMethod::SvdDirect).delta(delta)).unwrap();
            let r = detect(&model, &s, 160).unwrap();
            let flipped = detect(&model.clone().negated(), &s, 160).unwrap();
            prop_assert_eq!(&r, &flipped);

            // c|pᵀx| > c delta  <=>  |pᵀx| > delta, up to rounding at the boundary.
            let scaled = detect(&model.clone().with_delta(c * delta).unwrap(), &s.scaled(c).unwrap(), 160).unwrap();
            for (k, (&a, &b)) in r.flags.iter().zip(&scaled.flags).enumerate() {
                if k + 1 >= 8 {
                    let score = r.scores[k + 1 - 8];
                    if (score - delta).abs() > 1e-12 * delta.max(score) {
                        prop_assert_eq!(a, b);
                    }
                }
            }
        }

        #[test]
        fn threshold_support_nested(d1 in 0.01f64..1.0, extra in 0.0f64..1.0, seed in 0u64..50) {
            let base = periodic(200, 17.0);
            let v: Vec<f64> = base.values().iter().enumerate()
                .map(|(i, x)| x + if i > 150 { ((i as u64 * 2654435761 + seed) % 1000) as f64 / 500.0 - 1.0 } else { 0.0 })
                .collect();
            let s = TimeSeries::new(v).unwrap();
            let model = fit(&s, &FitConfig::new(10, 120, KernelMethod::Ipm)).unwrap();
            let lo = detect(&model.clone().with_delta(d1).unwrap(), &s, 200).unwrap();
            let hi = detect(&model.with_delta(d1 + extra).unwrap(), &s, 200).unwrap();
            for (a, b) in lo.flags.iter().zip(&hi.flags) {
                prop_assert!(b <= a);
            }
        }

        #[test]
        fn regions_partition_support(flags in prop::collection::vec(0u8..2, 0..80)) {
            let regions = flagged_regions(&flags);
            let mut rebuilt = vec![0u8; flags.len()];
            let mut prev_end = 0;
            for &(a, b) in &regions {
                prop_assert!(a <= b);
                prop_assert!(a > prev_end + 1 || prev_end == 0 && a >= 1);
                prev_end = b;
                for i in a..=b {
                    rebuilt[i - 1] = 1;
                }
            }
            prop_assert_eq!(rebuilt, flags);
        }
    }
}

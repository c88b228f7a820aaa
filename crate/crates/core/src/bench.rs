//! Wall-clock comparison of the kernel-vector backends.
//!
//! Each backend runs on a pre-built trajectory matrix. For the Gram-based
//! backends the Gram product is inside the timed region; the direct SVD has
//! no Gram step. Timed regions are single-threaded and back-to-back.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::error::{PadError, Result};
use crate::series::{build_trajectory, TimeSeries, TrajectoryMatrix};
use crate::spectral::{kernel_vector, IpmStart, KernelMethod, KernelOptions};

const UNRECORDED_RUNS: usize = 3;

/// A timed configuration: a kernel backend, plus the IPM variant whose
/// first shift is 0 instead of the block warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BenchMethod {
    Kernel(KernelMethod),
    IpmWarmStart,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 5] = [
        BenchMethod::Kernel(KernelMethod::Ipm),
        BenchMethod::IpmWarmStart,
        BenchMethod::Kernel(KernelMethod::SymmetricEig),
        BenchMethod::Kernel(KernelMethod::SvdGram),
        BenchMethod::Kernel(KernelMethod::SvdDirect),
    ];

    pub fn label(self) -> &'static str {
        match self {
            BenchMethod::Kernel(m) => m.as_str(),
            BenchMethod::IpmWarmStart => "ipm-warm",
        }
    }

    fn kernel(self) -> KernelMethod {
        match self {
            BenchMethod::Kernel(m) => m,
            BenchMethod::IpmWarmStart => KernelMethod::Ipm,
        }
    }

    fn options(self, seed: u64) -> KernelOptions {
        let ipm_start = match self {
            BenchMethod::IpmWarmStart => IpmStart::Shift(0.0),
            _ => IpmStart::Subspace,
        };
        KernelOptions { seed, ipm_start, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct BenchSignal {
    pub name: String,
    pub series: TimeSeries,
    pub lag: usize,
    pub train_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub signal: String,
    pub method: BenchMethod,
    /// Mean over recorded trials; `None` when the backend failed.
    pub mean_seconds: Option<f64>,
    pub trials: usize,
    pub includes_gram_time: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub trials: usize,
}

impl BenchReport {
    pub fn mean(&self, signal: &str, method: BenchMethod) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.signal == signal && r.method == method)
            .and_then(|r| r.mean_seconds)
    }

    pub fn signals(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.signal.as_str()) {
                out.push(&r.signal);
            }
        }
        out
    }

    /// Aligned table: one row per signal, one column per method.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<12}", "signal");
        for m in BenchMethod::ALL {
            let _ = write!(out, "{:>14}", m.label());
        }
        out.push('\n');
        for s in self.signals() {
            let _ = write!(out, "{s:<12}");
            for m in BenchMethod::ALL {
                match self.mean(s, m) {
                    Some(t) => {
                        let _ = write!(out, "{t:>14.6}");
                    }
                    None => {
                        let _ = write!(out, "{:>14}", "failed");
                    }
                }
            }
            out.push('\n');
        }
        let _ = writeln!(out, "mean seconds over {} trials", self.trials);
        out
    }

    /// Columns: signal, method, mean_seconds, trials.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "signal,method,mean_seconds,trials")?;
        for r in &self.rows {
            let mean = r.mean_seconds.map(|t| format!("{t:e}")).unwrap_or_default();
            writeln!(w, "{},{},{},{}", r.signal, r.method.label(), mean, r.trials)?;
        }
        Ok(())
    }
}

fn time_one(h: &TrajectoryMatrix, method: BenchMethod, trials: usize, seed: u64) -> Result<f64> {
    let kernel = method.kernel();
    let opts = method.options(seed);
    for _ in 0..UNRECORDED_RUNS {
        kernel_vector(h, kernel, &opts)?;
    }
    let mut total = 0.0;
    for _ in 0..trials {
        let start = Instant::now();
        let r = kernel_vector(h, kernel, &opts)?;
        total += start.elapsed().as_secs_f64();
        std::hint::black_box(r);
    }
    // Clock granularity can round a trial to zero on very small inputs.
    Ok((total / trials as f64).max(f64::MIN_POSITIVE))
}

pub fn time_methods(signals: &[BenchSignal], trials: usize, seed: u64) -> Result<BenchReport> {
    if trials < 1 {
        return Err(PadError::param("trials", "must be at least 1"));
    }
    let mut rows = Vec::with_capacity(signals.len() * BenchMethod::ALL.len());
    for sig in signals {
        let h = build_trajectory(&sig.series, sig.lag, sig.train_len)?;
        for method in BenchMethod::ALL {
            let (mean_seconds, error) = match time_one(&h, method, trials, seed) {
                Ok(t) => (Some(t), None),
                Err(e) => (None, Some(e.to_string())),
            };
            rows.push(BenchRow {
                signal: sig.name.clone(),
                method,
                mean_seconds,
                trials,
                includes_gram_time: method.kernel().uses_gram(),
                error,
            });
        }
    }
    Ok(BenchReport { rows, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_signal_report() {
        let v: Vec<f64> = (0..40).map(|t| (t as f64 * 0.37).sin() + 0.01 * t as f64).collect();
        let sig = BenchSignal { name: "tiny".into(), series: TimeSeries::new(v).unwrap(), lag: 5, train_len: 30 };
        let rep = time_methods(&[sig], 1, 0).unwrap();
        assert_eq!(rep.rows.len(), 5);
        assert!(rep.rows.iter().all(|r| r.mean_seconds.is_some_and(|t| t > 0.0)));
        assert!(rep.rows.iter().all(|r| r.includes_gram_time == (r.method != BenchMethod::Kernel(KernelMethod::SvdDirect))));
        let table = rep.to_table();
        assert!(table.contains("tiny") && table.contains("svd-gram"));
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "signal,method,mean_seconds,trials");
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(time_methods(&[], 0, 0).is_err());
    }
}

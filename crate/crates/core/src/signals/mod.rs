//! Synthetic signals with ground-truth anomaly windows, and CSV I/O.

mod csv_io;
pub mod presets;

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PadError, Result};
use crate::series::TimeSeries;

pub use csv_io::{labels_path, parse_csv, read_csv, read_labels, write_csv, write_labeled};
pub use presets::Preset;

/// Inclusive, 1-based anomaly window.
pub type Window = (usize, usize);

const CHIRP_F0: f64 = 3.0;
const CHIRP_F1: f64 = 8.0;
const CHIRP_HARMONIC: f64 = 2.5;
const CHIRP_RATIO: f64 = 0.5;

const TONE_PERIOD: f64 = 25.0;
const TONE_STEP: f64 = 3.0;

const GAIT_PERIOD: f64 = 40.0;
const GAIT_PACE: f64 = 1.5;
const GAIT_AMPLITUDE: f64 = 2.0;

/// Waveform family of a generated signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Two-tone chirp whose base frequency ramps from 3 to 8 cycles per record.
    Chirp,
    /// Fixed-frequency tone whose amplitude steps up inside each window.
    StepAmplitude,
    /// Periodic gait-like waveform; inside each window the pace and
    /// amplitude change, and the phase carries over afterwards.
    Gait,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Chirp => "chirp",
            Profile::StepAmplitude => "step_amplitude",
            Profile::Gait => "gait",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = PadError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "chirp" => Ok(Profile::Chirp),
            "step_amplitude" | "step" | "massager" => Ok(Profile::StepAmplitude),
            "gait" | "walking" => Ok(Profile::Gait),
            other => Err(PadError::param(
                "profile",
                format!("unknown profile {other:?} (expected chirp, step_amplitude or gait)"),
            )),
        }
    }
}

/// All parameters a generated signal is a pure function of.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub profile: Profile,
    pub length: usize,
    pub windows: Vec<Window>,
    /// Uniform noise in `[-noise_amp, noise_amp]` added on every window sample.
    pub noise_amp: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(profile: Profile, length: usize, windows: Vec<Window>, noise_amp: f64, seed: u64) -> Self {
        Self { profile, length, windows, noise_amp, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSignal {
    pub series: TimeSeries,
    pub anomaly_windows: Vec<Window>,
    pub generator_spec: Option<GeneratorSpec>,
}

/// Windows must be sorted, disjoint, non-empty and inside `[1, length]`.
pub fn validate_windows(windows: &[Window], length: usize) -> Result<()> {
    let mut prev_end = 0;
    for &(start, end) in windows {
        if start < 1 || start > end || end > length {
            return Err(PadError::InvalidWindow(format!(
                "({start}, {end}) not a valid interval inside [1, {length}]"
            )));
        }
        if prev_end != 0 && start <= prev_end {
            return Err(PadError::InvalidWindow(format!(
                "({start}, {end}) overlaps or precedes the previous window ending at {prev_end}"
            )));
        }
        prev_end = end;
    }
    Ok(())
}

fn in_windows(windows: &[Window], t: usize) -> bool {
    windows.iter().any(|&(a, b)| (a..=b).contains(&t))
}

pub fn generate_synthetic(spec: &GeneratorSpec) -> Result<LabeledSignal> {
    let n = spec.length;
    if n < 1 {
        return Err(PadError::param("length", "must be at least 1"));
    }
    if !(spec.noise_amp >= 0.0 && spec.noise_amp.is_finite()) {
        return Err(PadError::param("noise_amp", "must be finite and nonnegative"));
    }
    validate_windows(&spec.windows, n)?;

    let mut values = match spec.profile {
        Profile::Chirp => chirp(n),
        Profile::StepAmplitude => step_amplitude(n, &spec.windows),
        Profile::Gait => gait(n, &spec.windows),
    };
    if spec.noise_amp > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for &(a, b) in &spec.windows {
            for v in &mut values[a - 1..b] {
                *v += rng.gen_range(-spec.noise_amp..=spec.noise_amp);
            }
        }
    }
    Ok(LabeledSignal {
        series: TimeSeries::new(values)?,
        anomaly_windows: spec.windows.clone(),
        generator_spec: Some(spec.clone()),
    })
}

/// `sin(2π f(t) t Δ) + 0.5 cos(2π 2.5 f(t) t Δ)`, `Δ = 1/n`, `f` linear from 3 to 8.
fn chirp(n: usize) -> Vec<f64> {
    let dt = 1.0 / n as f64;
    let span = (n.max(2) - 1) as f64;
    (1..=n)
        .map(|t| {
            let f = CHIRP_F0 + (CHIRP_F1 - CHIRP_F0) * (t - 1) as f64 / span;
            let arg = TAU * f * t as f64 * dt;
            arg.sin() + CHIRP_RATIO * (CHIRP_HARMONIC * arg).cos()
        })
        .collect()
}

fn step_amplitude(n: usize, windows: &[Window]) -> Vec<f64> {
    (1..=n)
        .map(|t| {
            let w = TAU * t as f64 / TONE_PERIOD;
            let amp = if in_windows(windows, t) { TONE_STEP } else { 1.0 };
            amp * (w.sin() + 0.3 * (2.0 * w + 0.7).sin())
        })
        .collect()
}

fn gait(n: usize, windows: &[Window]) -> Vec<f64> {
    let mut phase = 0.0;
    (1..=n)
        .map(|t| {
            let inside = in_windows(windows, t);
            phase += TAU / GAIT_PERIOD * if inside { GAIT_PACE } else { 1.0 };
            let g = phase.sin() + 0.6 * (2.0 * phase + 0.5).sin() + 0.3 * (3.0 * phase + 1.0).sin();
            if inside {
                GAIT_AMPLITUDE * g
            } else {
                g
            }
        })
        .collect()
}

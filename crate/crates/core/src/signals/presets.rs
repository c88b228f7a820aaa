//! Reference signals with detector settings that separate their windows.

use serde::Serialize;

use super::{generate_synthetic, GeneratorSpec, LabeledSignal, Profile};
use crate::error::Result;
use crate::spectral::KernelMethod;

/// A generator spec together with the detector configuration used on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub spec: GeneratorSpec,
    pub lag: usize,
    pub train_len: usize,
    pub delta: f64,
    pub method: KernelMethod,
}

impl Preset {
    pub fn generate(&self) -> Result<LabeledSignal> {
        generate_synthetic(&self.spec)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.spec.seed = seed;
        self
    }

    pub fn all() -> [Preset; 3] {
        [synthetic(), massager(), walking()]
    }

    pub fn by_name(name: &str) -> Option<Preset> {
        Preset::all().into_iter().find(|p| p.name == name)
    }
}

/// Two-tone chirp with noise in the last 200 samples.
///
/// The window sits at the end of the record: lag vectors that straddle a
/// noisy stretch score high for `L - 1` samples after it ends, which an
/// interior window would charge as false positives.
pub fn synthetic() -> Preset {
    Preset {
        name: "synthetic",
        spec: GeneratorSpec::new(Profile::Chirp, 2000, vec![(1801, 2000)], 80.0, 0),
        lag: 150,
        train_len: 1200,
        delta: 1.2,
        method: KernelMethod::SvdDirect,
    }
}

/// Tone whose amplitude triples inside one window.
pub fn massager() -> Preset {
    Preset {
        name: "massager",
        spec: GeneratorSpec::new(Profile::StepAmplitude, 2000, vec![(1501, 1700)], 6.0, 0),
        lag: 75,
        train_len: 1300,
        delta: 0.4,
        method: KernelMethod::SvdDirect,
    }
}

/// Gait waveform that speeds up inside one window.
pub fn walking() -> Preset {
    Preset {
        name: "walking",
        spec: GeneratorSpec::new(Profile::Gait, 2000, vec![(1301, 1450)], 20.0, 0),
        lag: 60,
        train_len: 900,
        delta: 1.01,
        method: KernelMethod::Ipm,
    }
}

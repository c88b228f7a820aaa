//! Signals stored as `<id>.csv` plus a `<id>.labels.csv` sidecar in a data directory.
//!
//! Any CSV dropped into the directory is listed under its file stem.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use padkit::signals::{labels_path, read_csv, read_labels, write_labeled, GeneratorSpec, LabeledSignal};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone)]
pub struct SignalStore {
    dir: PathBuf,
}

/// Stable id for a generator spec: the first 16 hex digits of the SHA-256
/// of its JSON encoding.
pub fn signal_id(spec: &GeneratorSpec) -> String {
    let json = serde_json::to_vec(spec).expect("spec is serializable");
    let digest = Sha256::digest(&json);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl SignalStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.csv"))
    }

    /// Writes under temporary names and renames, sidecar first, so a
    /// listed signal is always complete.
    pub fn save(&self, id: &str, signal: &LabeledSignal) -> AppResult<()> {
        fs::create_dir_all(&self.dir).map_err(|e| AppError::io(format!("{}: {e}", self.dir.display())))?;
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".{id}.{}.{n}.csv", std::process::id()));
        write_labeled(signal, &tmp).map_err(|e| AppError::io(e.to_string()))?;
        let dest = self.path(id);
        fs::rename(labels_path(&tmp), labels_path(&dest)).map_err(|e| AppError::io(e.to_string()))?;
        fs::rename(&tmp, &dest).map_err(|e| AppError::io(e.to_string()))?;
        Ok(())
    }

    pub fn load(&self, id: &str) -> AppResult<LabeledSignal> {
        if !valid_id(id) {
            return Err(AppError::validation("signal_id", format!("invalid signal id {id:?}")));
        }
        let path = self.path(id);
        if !path.is_file() {
            return Err(AppError::not_found("signal_id", format!("no stored signal {id:?}")));
        }
        let series = read_csv(&path).map_err(|e| AppError::input("signal_id", e))?;
        let anomaly_windows = read_labels(labels_path(&path)).map_err(|e| AppError::input("signal_id", e))?;
        Ok(LabeledSignal { series, anomaly_windows, generator_spec: None })
    }

    /// Sorted ids; empty when the directory does not exist yet.
    pub fn list(&self) -> AppResult<Vec<String>> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(AppError::io(e.to_string())),
        };
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter_map(|name| name.strip_suffix(".csv").map(str::to_string))
            .filter(|stem| !stem.ends_with(".labels") && valid_id(stem))
            .collect();
        ids.sort();
        Ok(ids)
    }
}

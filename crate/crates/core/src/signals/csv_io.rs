use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{validate_windows, LabeledSignal, Window};
use crate::error::{PadError, Result};
use crate::series::TimeSeries;

/// Parses either one value per line or `time,value` rows (the second column
/// is taken). A single leading header line is skipped; blank lines are
/// ignored.
pub fn parse_csv(text: &str) -> Result<TimeSeries> {
    let mut values = Vec::new();
    let mut seen_first = false;
    for (i, raw) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let first = !seen_first;
        seen_first = true;
        match parse_row(line) {
            Some(v) if v.is_finite() => values.push(v),
            Some(_) => return Err(PadError::NonFiniteValue { line: line_no }),
            None if first => continue,
            None => return Err(PadError::Parse { line: line_no, content: line.to_string() }),
        }
    }
    if values.is_empty() {
        return Err(PadError::EmptyFile);
    }
    TimeSeries::new(values)
}

fn parse_row(line: &str) -> Option<f64> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    match fields.as_slice() {
        [v] => v.parse().ok(),
        [t, v] => {
            t.parse::<f64>().ok()?;
            v.parse().ok()
        }
        _ => None,
    }
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    parse_csv(&fs::read_to_string(path)?)
}

/// One value per line, LF endings, 17 significant digits (exact round trip).
pub fn write_csv(values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    if values.is_empty() {
        return Err(PadError::EmptyFile);
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in values {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

/// `<dir>/<stem>.labels.csv` next to `path`.
pub fn labels_path(path: impl AsRef<Path>) -> PathBuf {
    let path = path.as_ref();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.labels.csv"))
}

/// Writes the values to `path` and the windows as `start,end` rows to the sidecar.
pub fn write_labeled(signal: &LabeledSignal, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_csv(signal.series.values(), path)?;
    let mut w = BufWriter::new(fs::File::create(labels_path(path))?);
    for (a, b) in &signal.anomaly_windows {
        writeln!(w, "{a},{b}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sidecar written by [`write_labeled`]. A missing file means no windows.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<Window>> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
        match parsed {
            Some(w) => out.push(w),
            None if i == 0 => continue,
            None => return Err(PadError::Parse { line: i + 1, content: line.to_string() }),
        }
    }
    let max_end = out.iter().map(|w| w.1).max().unwrap_or(0);
    validate_windows(&out, max_end)?;
    Ok(out)
}

//! CSV readers and writers for signals, driver vectors, clip
//! schedules, and experiment outputs.
//!
//! The signal format is one sample per row with an optional header:
//! either a single `value` column or `time,value`, where the time
//! column is ignored on read — sampling rates always travel
//! out-of-band. Writers emit `time,value` rows with times derived from
//! the sampling rate, and format floats with the shortest
//! representation that round-trips, so written files are stable inputs
//! for byte-comparison tests.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{Clip, PhaseDiagramGrid, RocResult};
use crate::signal::Signal;

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

/// Splits one CSV line into trimmed fields.
fn fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

/// Reads numeric rows of one or two columns; the last column is the
/// value. An unparsable first line is treated as a header and skipped.
fn read_numeric_rows(path: &Path) -> Result<Vec<f64>> {
    let content = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    let mut first_data_line = true;
    for (idx, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols = fields(line);
        if cols.len() > 2 {
            return Err(malformed(
                path,
                idx + 1,
                format!("expected 1 or 2 columns, found {}", cols.len()),
            ));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            cols.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(nums) => {
                let v = *nums.last().expect("split yields at least one field");
                if !v.is_finite() {
                    return Err(malformed(path, idx + 1, "non-finite value"));
                }
                values.push(v);
            }
            Err(_) if first_data_line => {
                // Header row such as `time,value` or `value`.
            }
            Err(e) => {
                return Err(malformed(path, idx + 1, format!("not a number: {e}")));
            }
        }
        first_data_line = false;
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("CSV file has no data rows"));
    }
    Ok(values)
}

/// Reads a signal from CSV; the sampling rate is supplied by the
/// caller, not inferred from any time column.
pub fn read_signal_csv(path: &Path, sample_rate_hz: f64) -> Result<Signal> {
    Signal::new(read_numeric_rows(path)?, sample_rate_hz)
}

/// Reads a bare value vector (driver, baseline differences) from CSV.
pub fn read_values_csv(path: &Path) -> Result<Vec<f64>> {
    read_numeric_rows(path)
}

fn write_time_value(path: &Path, values: &[f64], sample_rate_hz: f64) -> Result<()> {
    let mut out = String::with_capacity(16 * values.len() + 16);
    out.push_str("time,value\n");
    for (i, v) in values.iter().enumerate() {
        let t = i as f64 / sample_rate_hz;
        writeln!(out, "{t},{v}").expect("writing to a String cannot fail");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes a signal as `time,value` rows.
pub fn write_signal_csv(path: &Path, signal: &Signal) -> Result<()> {
    write_time_value(path, signal.samples(), signal.sample_rate_hz())
}

/// Writes a value vector as `time,value` rows on the given rate's
/// grid.
pub fn write_values_csv(path: &Path, values: &[f64], sample_rate_hz: f64) -> Result<()> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    write_time_value(path, values, sample_rate_hz)
}

/// Reads a clip schedule: `start_s,end_s,label` rows with labels
/// `stimulus` or `silence`, optional header.
pub fn read_clips_csv(path: &Path) -> Result<Vec<Clip>> {
    let content = std::fs::read_to_string(path)?;
    let mut clips = Vec::new();
    let mut first_data_line = true;
    for (idx, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols = fields(line);
        if cols.len() != 3 {
            return Err(malformed(
                path,
                idx + 1,
                format!("expected 3 columns, found {}", cols.len()),
            ));
        }
        let bounds: std::result::Result<Vec<f64>, _> =
            cols[..2].iter().map(|c| c.parse::<f64>()).collect();
        match bounds {
            Ok(nums) => {
                let label = cols[2]
                    .parse()
                    .map_err(|e| malformed(path, idx + 1, format!("{e}")))?;
                clips.push(Clip {
                    start_s: nums[0],
                    end_s: nums[1],
                    label,
                });
            }
            Err(_) if first_data_line => {}
            Err(e) => {
                return Err(malformed(path, idx + 1, format!("not a number: {e}")));
            }
        }
        first_data_line = false;
    }
    if clips.is_empty() {
        return Err(Error::EmptyInput("clip schedule has no rows"));
    }
    Ok(clips)
}

/// Writes a clip schedule as `start_s,end_s,label` rows.
pub fn write_clips_csv(path: &Path, clips: &[Clip]) -> Result<()> {
    let mut out = String::from("start_s,end_s,label\n");
    for c in clips {
        writeln!(out, "{},{},{}", c.start_s, c.end_s, c.label)
            .expect("writing to a String cannot fail");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes a phase-diagram grid as one row per cell:
/// `s,c,alpha,trial_count,mean_rel_error,std_rel_error`.
pub fn write_phase_diagram_csv(path: &Path, grid: &PhaseDiagramGrid) -> Result<()> {
    let mut out = String::from("s,c,alpha,trial_count,mean_rel_error,std_rel_error\n");
    for (si, &s) in grid.s_values.iter().enumerate() {
        for (ci, &c) in grid.c_values.iter().enumerate() {
            writeln!(
                out,
                "{s},{c},{},{},{},{}",
                grid.alpha, grid.trials, grid.mean_rel_error[si][ci], grid.std_rel_error[si][ci]
            )
            .expect("writing to a String cannot fail");
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes an ROC curve as `threshold,fpr,tpr` rows; the sentinel
/// thresholds appear as `inf` and `-inf`.
pub fn write_roc_csv(path: &Path, roc: &RocResult) -> Result<()> {
    let mut out = String::from("threshold,fpr,tpr\n");
    for i in 0..roc.thresholds.len() {
        writeln!(out, "{},{},{}", roc.thresholds[i], roc.fpr[i], roc.tpr[i])
            .expect("writing to a String cannot fail");
    }
    std::fs::write(path, out)?;
    Ok(())
}

//! Machine-readable output: the JSON report envelope, CSV renderers for
//! sampled data, and atomic file writes.
//!
//! Every command that emits JSON wraps its results in the same envelope:
//! `schema_version`, the command name, the canonical config text (so a
//! report is reproducible byte for byte), the command-specific `results`
//! object, and accumulated `warnings`. Non-finite floats are encoded as
//! the strings `"inf"`, `"-inf"`, and `"nan"` rather than JSON `null`.

use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::process;
use std::sync::atomic::{AtomicU64, Ordering};

use cit_core::envelope::SampledEnvelope;
use cit_core::sweep::SweepTable;
use cit_core::timedomain::TimeDomainResult;
use serde_json::{json, Value};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// The JSON envelope shared by all commands.
#[derive(Debug, Clone)]
pub struct Report {
    /// Subcommand that produced the report.
    pub command: &'static str,
    /// Canonical config text (see `RunConfig::canonical_text`).
    pub config_text: String,
    /// Command-specific payload.
    pub results: Value,
    /// Reliability notes accumulated during the run.
    pub warnings: Vec<String>,
}

impl Report {
    /// Assemble the full envelope.
    pub fn to_value(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config_text,
            "results": self.results,
            "warnings": self.warnings,
        })
    }

    /// Pretty-printed JSON text, newline-terminated.
    pub fn to_text(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_value()).expect("report is valid JSON");
        text.push('\n');
        text
    }
}

/// Encode one float for a report; non-finite values become strings so the
/// JSON stays parseable everywhere.
pub fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

static WRITE_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write `contents` to `path` atomically: the data lands under a temporary
/// name in the same directory and is renamed into place, so a crash or a
/// concurrent reader never sees a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let nonce = WRITE_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp_name = format!(
        ".{}.{}.{}.tmp",
        file_name.to_string_lossy(),
        process::id(),
        nonce
    );
    let tmp = match dir {
        Some(dir) => dir.join(tmp_name),
        None => tmp_name.into(),
    };
    std::fs::write(&tmp, contents)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

// ------------------------------------------------------------------ CSV --

/// One complex envelope: `t_seconds,re,im`.
pub fn envelope_csv(envelope: &SampledEnvelope) -> String {
    let grid = envelope.grid();
    let mut out = String::from("t_seconds,re,im\n");
    for (i, s) in envelope.samples().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", grid.time(i), s.re, s.im);
    }
    out
}

/// Boundary records of a time-domain run: `t_seconds,in_re,in_im,out_re,out_im`.
pub fn boundary_csv(result: &TimeDomainResult) -> String {
    let mut out = String::from("t_seconds,in_re,in_im,out_re,out_im\n");
    for k in 0..result.record_len() {
        let a = result.boundary_input[k];
        let b = result.boundary_output[k];
        let _ = writeln!(out, "{},{},{},{},{}", result.time(k), a.re, a.im, b.re, b.im);
    }
    out
}

/// Medium snapshots, one row per (time, z-node):
/// `time_seconds,z_meters,field_re,field_im,pol_re,pol_im,spin_re,spin_im`.
pub fn snapshots_csv(result: &TimeDomainResult) -> String {
    let mut out =
        String::from("time_seconds,z_meters,field_re,field_im,pol_re,pol_im,spin_re,spin_im\n");
    for snap in &result.snapshots {
        for (j, field) in snap.field.iter().enumerate() {
            let p = snap.polarization[j];
            let s = snap.spin[j];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                snap.time,
                j as f64 * result.z_step,
                field.re,
                field.im,
                p.re,
                p.im,
                s.re,
                s.im
            );
        }
    }
    out
}

/// Cavity occupation trace of a dynamic run: `t_seconds,n_cav`.
pub fn occupation_csv(result: &TimeDomainResult) -> Option<String> {
    let trace = result.cavity_occupation_trace()?;
    let mut out = String::from("t_seconds,n_cav\n");
    for (k, n) in trace.iter().enumerate() {
        let _ = writeln!(out, "{},{}", result.time(k), n);
    }
    Some(out)
}

/// Sweep results as JSON lines, one object per point in the same order as
/// the CSV produced by [`cit_core::sweep::to_csv`].
pub fn sweep_jsonl(table: &SweepTable) -> String {
    let mut out = String::new();
    for row in &table.rows {
        let coords: Value = table
            .axes
            .iter()
            .zip(&row.coordinates)
            .map(|(a, c)| (a.name().to_string(), json_f64(*c)))
            .collect::<serde_json::Map<String, Value>>()
            .into();
        let values: Value = table
            .metrics
            .iter()
            .zip(&row.values)
            .map(|(m, v)| {
                (
                    m.name().to_string(),
                    v.map(json_f64).unwrap_or(Value::Null),
                )
            })
            .collect::<serde_json::Map<String, Value>>()
            .into();
        let line = json!({
            "index": row.index,
            "coordinates": coords,
            "values": values,
            "error": row.error,
        });
        let _ = writeln!(out, "{line}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_floats_become_strings() {
        assert_eq!(json_f64(2.5), json!(2.5));
        assert_eq!(json_f64(f64::INFINITY), json!("inf"));
        assert_eq!(json_f64(f64::NEG_INFINITY), json!("-inf"));
        assert_eq!(json_f64(f64::NAN), json!("nan"));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("cit-report-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.txt");
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

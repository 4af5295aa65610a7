//! Output plumbing: CSV assembly, content hashing, the run manifest, and
//! the stdout summary in human or machine form.
//!
//! Commands build their CSV bytes in memory and hand them back; the driver
//! writes files, hashes contents, and emits one manifest per run. Keeping
//! serialization in one place makes the determinism contract auditable:
//! identical config and seed produce identical bytes, and wall times live
//! only in the manifest.

use std::path::PathBuf;
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

/// A file the command wants written.
pub struct FilePlan {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    pub rows: u64,
}

/// What a finished command reports back to the driver.
pub struct Completed {
    /// Command-specific summary; printed in `--json` mode and echoed into
    /// the manifest.
    pub summary: Value,
    pub files: Vec<FilePlan>,
    /// A failure that still produced complete output (non-convergence,
    /// sign problem); reported on stderr with exit code 2.
    pub soft_error: Option<String>,
}

impl Completed {
    pub fn new(summary: Value) -> Self {
        Self {
            summary,
            files: Vec::new(),
            soft_error: None,
        }
    }
}

/// 64-bit FNV-1a over the output bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Formats a float cell, refusing non-finite values: a NaN in a CSV is a
/// defect, not data.
pub fn cell(v: f64) -> Result<String, CliError> {
    if !v.is_finite() {
        return Err(CliError::Numerical(format!(
            "refusing to write non-finite value {v} to CSV"
        )));
    }
    Ok(format!("{v}"))
}

/// RFC-4180 CSV with a header row.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Numerical(format!("csv serialization failed: {e}"))
}

#[derive(Serialize)]
struct ManifestOutput {
    path: String,
    bytes: u64,
    rows: u64,
    fnv1a64: String,
}

/// Written next to the data; the only place timestamps appear.
#[derive(Serialize)]
pub struct RunManifest<'a> {
    artifact_version: &'static str,
    generator_id: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    outputs: Vec<ManifestOutput>,
    wall_ms: WallTimes,
    summary: &'a Value,
}

#[derive(Serialize)]
pub struct WallTimes {
    pub setup: u64,
    pub compute: u64,
    pub write: u64,
}

/// Writes data files plus the manifest and prints the stdout summary.
/// Returns the manifest JSON value for `--json` mode consumers.
pub fn emit(
    command: &str,
    cfg: &RunConfig,
    done: &Completed,
    setup: Duration,
    compute: Duration,
) -> Result<(), CliError> {
    let write_started = std::time::Instant::now();
    let mut outputs = Vec::new();
    for file in &done.files {
        std::fs::write(&file.path, &file.bytes).map_err(|e| CliError::Io {
            path: file.path.clone(),
            source: e,
        })?;
        outputs.push(ManifestOutput {
            path: file.path.display().to_string(),
            bytes: file.bytes.len() as u64,
            rows: file.rows,
            fnv1a64: format!("{:016x}", fnv1a64(&file.bytes)),
        });
    }
    let manifest_value = if done.files.is_empty() {
        None
    } else {
        let manifest = RunManifest {
            artifact_version: env!("CARGO_PKG_VERSION"),
            generator_id: pfield_core::gibbs::GENERATOR_ID,
            command,
            config: cfg,
            outputs,
            wall_ms: WallTimes {
                setup: setup.as_millis() as u64,
                compute: compute.as_millis() as u64,
                write: write_started.elapsed().as_millis() as u64,
            },
            summary: &done.summary,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        std::fs::write(&cfg.manifest, text).map_err(|e| CliError::Io {
            path: cfg.manifest.clone(),
            source: e,
        })?;
        Some(serde_json::to_value(&manifest).map_err(|e| CliError::Numerical(e.to_string()))?)
    };

    if cfg.json {
        let machine = json!({
            "command": command,
            "summary": done.summary,
            "manifest": manifest_value,
            "ok": done.soft_error.is_none(),
        });
        println!("{machine}");
    } else {
        for file in &done.files {
            println!("wrote {} ({} rows)", file.path.display(), file.rows);
        }
        if !done.files.is_empty() {
            println!("manifest {}", cfg.manifest.display());
        }
        print_human(&done.summary, 0);
    }
    Ok(())
}

fn print_human(v: &Value, indent: usize) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                match inner {
                    Value::Object(_) | Value::Array(_) => {
                        println!("{:indent$}{k}:", "");
                        print_human(inner, indent + 2);
                    }
                    other => println!("{:indent$}{k}: {other}", ""),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => print_human(item, indent),
                    other => println!("{:indent$}- {other}", ""),
                }
            }
        }
        other => println!("{:indent$}{other}", ""),
    }
}

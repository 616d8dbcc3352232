//! Report schema and writers.
//!
//! JSON layout (schema version 1): `schema_version`, `tool`, `tool_version`,
//! `command`, `seed`, `config`, `runs`, `pass`, `wall_time_seconds`. Each
//! run carries the structure it was built from, the pointwise and sample
//! checks, the integral checks, the skipped entries and free-form notes.
//! `wall_time_seconds` is always the last key, and it is the only field that
//! differs between two runs of the same config and seed.
//!
//! CSV columns, in order: `n, m, tau, identity, max_residual, pass`. Every
//! structure gets one row per selected identity; entries that do not apply
//! have an empty `max_residual` and `pass = skipped`. Integral rows carry the
//! relative gap in `max_residual`.

use std::io;
use std::path::{Path, PathBuf};

use qemcheck_core::identities::CheckSummary;
use qemcheck_core::models::ModelSpec;
use qemcheck_core::quadrature::IntegralCheck;
use serde::Serialize;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_COLUMNS: [&str; 6] = ["n", "m", "tau", "identity", "max_residual", "pass"];

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub structure: ModelSpec,
    pub sample_points: usize,
    pub checks: Vec<CheckSummary>,
    pub integrals: Vec<IntegralCheck>,
    pub skipped: Vec<Skipped>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl RunReport {
    pub fn new(structure: ModelSpec, sample_points: usize) -> Self {
        RunReport {
            structure,
            sample_points,
            checks: Vec::new(),
            integrals: Vec::new(),
            skipped: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    pub fn finish(mut self) -> Self {
        self.pass = self.checks.iter().all(|c| c.pass) && self.integrals.iter().all(|c| c.pass);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: RunConfig,
    pub runs: Vec<RunReport>,
    pub pass: bool,
    pub wall_time_seconds: f64,
}

impl Report {
    pub fn new(command: &'static str, config: RunConfig, runs: Vec<RunReport>, wall_time_seconds: f64) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_BIN_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed: config.seed,
            pass: !runs.is_empty() && runs.iter().all(|r| r.pass),
            config,
            runs,
            wall_time_seconds,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// One row per structure and identity.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_COLUMNS).expect("in-memory write");
        for run in &self.runs {
            let s = &run.structure;
            let rows = run
                .checks
                .iter()
                .map(|c| (&c.id, format!("{:e}", c.max_residual), c.pass.to_string()))
                .chain(
                    run.integrals
                        .iter()
                        .map(|c| (&c.id, format!("{:e}", c.relative_gap), c.pass.to_string())),
                )
                .chain(run.skipped.iter().map(|k| (&k.id, String::new(), "skipped".to_string())));
            for (id, max, pass) in rows {
                writer
                    .write_record([
                        s.dim.to_string(),
                        s.m.to_string(),
                        s.tau.to_string(),
                        id.clone(),
                        max,
                        pass,
                    ])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// Human-readable digest, one line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for run in &self.runs {
            let s = &run.structure;
            out.push_str(&format!(
                "{} n={} r={} chart={} tau={} m={} v_axis={}\n",
                s.family, s.dim, s.radius, s.chart, s.tau, s.m, s.v_axis
            ));
            for c in &run.checks {
                match &c.note {
                    Some(note) => out.push_str(&format!("  {:4} {:40} {note}\n", verdict(c.pass), c.id)),
                    None => out.push_str(&format!(
                        "  {:4} {:40} max {:10.3e} tol {:.1e}\n",
                        verdict(c.pass),
                        c.id,
                        c.max_residual,
                        c.tolerance
                    )),
                }
            }
            for c in &run.integrals {
                out.push_str(&format!(
                    "  {:4} {:40} gap {:10.3e} tol {:.1e}\n",
                    verdict(c.pass),
                    c.id,
                    c.relative_gap,
                    c.tolerance
                ));
            }
            for s in &run.skipped {
                out.push_str(&format!("  skip {:40} {}\n", s.id, s.reason));
            }
        }
        out.push_str(&format!("overall: {}\n", verdict(self.pass)));
        out
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Writes every output to a sibling temporary file first and renames them
/// only once all writes succeeded.
pub fn write_all(outputs: &[(&Path, &str)]) -> io::Result<()> {
    let mut staged: Vec<(PathBuf, &Path)> = Vec::new();
    for (path, content) in outputs {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".partial");
        let tmp = PathBuf::from(tmp);
        if let Err(e) = std::fs::write(&tmp, content) {
            for (t, _) in &staged {
                let _ = std::fs::remove_file(t);
            }
            let _ = std::fs::remove_file(&tmp);
            return Err(e);
        }
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        std::fs::rename(tmp, path)?;
    }
    Ok(())
}

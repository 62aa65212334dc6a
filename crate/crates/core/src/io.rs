//! Output formats. Everything is written with explicit 17-significant-digit
//! scientific notation and '\n' line endings so repeated runs are
//! byte-identical.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::hybrid::HybridTrajectory;
use crate::scenarios::SweepPoint;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// Full-precision float formatting: round-trips f64 exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory table: t, the state columns, the active force, the memory
/// variable (blank when the model has none), and the mode label.
pub fn trajectory_csv(traj: &HybridTrajectory) -> String {
    let dim = traj.samples.first().map_or(0, |s| s.y.len());
    let mut out = String::new();
    out.push('t');
    for i in 1..=dim {
        let _ = write!(out, ",y{i}");
    }
    out.push_str(",lambda,kappa,mode\n");
    for s in &traj.samples {
        let _ = write!(out, "{}", fmt17(s.t));
        for v in &s.y {
            let _ = write!(out, ",{}", fmt17(*v));
        }
        let _ = write!(out, ",{}", fmt17(s.lambda));
        match traj.kappa_index {
            Some(i) => {
                let _ = write!(out, ",{}", fmt17(s.y[i]));
            }
            None => out.push(','),
        }
        let mode = s.mode.map_or("smooth", |m| m.as_str());
        let _ = writeln!(out, ",{mode}");
    }
    out
}

#[derive(Serialize)]
struct EventRecord<'a> {
    t: f64,
    kind: &'a str,
    state: &'a [f64],
}

/// Event log: one JSON object per line with keys t, kind, state.
pub fn events_jsonl(traj: &HybridTrajectory) -> String {
    let mut out = String::new();
    for e in &traj.events {
        let rec = EventRecord {
            t: e.t,
            kind: e.kind.as_str(),
            state: &e.state,
        };
        out.push_str(&serde_json::to_string(&rec).expect("event record serializes"));
        out.push('\n');
    }
    out
}

pub struct KernelRow {
    pub t: f64,
    pub kernel: f64,
    pub kernel_exp: f64,
    pub tail_bound: f64,
}

pub fn kernels_csv(rows: &[KernelRow]) -> String {
    let mut out = String::from("t,kernel,kernel_exp,tail_bound\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt17(r.t),
            fmt17(r.kernel),
            fmt17(r.kernel_exp),
            fmt17(r.tail_bound)
        );
    }
    out
}

pub fn sweep_csv(up: &[SweepPoint], down: &[SweepPoint]) -> String {
    let mut out = String::from("direction,omega,amplitude,periods\n");
    for (label, points) in [("up", up), ("down", down)] {
        for p in points {
            let _ = writeln!(
                out,
                "{label},{},{},{}",
                fmt17(p.omega),
                fmt17(p.amplitude),
                p.periods
            );
        }
    }
    out
}

/// Manifest: the fully resolved config plus a [report] table, itself a valid
/// run config.
pub fn manifest_toml(config: &RunConfig, report: toml::Table) -> Result<String> {
    let mut resolved = config.clone();
    resolved.report = Some(toml::Value::Table(report));
    toml::to_string_pretty(&resolved).map_err(|e| Error::Config(format!("manifest encode: {e}")))
}

/// Machine-readable error record, one JSON object.
pub fn error_record(err: &Error) -> String {
    serde_json::json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
    })
    .to_string()
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}

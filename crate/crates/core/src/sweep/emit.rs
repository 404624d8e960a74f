//! CSV and JSON writers for trajectories, sweeps and convergence tables.
//!
//! CSV floats are written with 17 significant digits in scientific
//! notation; non-finite values as `inf`, `-inf` or `NaN`, missing values as
//! empty fields. JSON uses the shortest round-trip representation, with
//! non-finite values as `null`.

use std::io::Write;

use serde_json::json;

use super::config::{Format, ParamName};
use super::{ConvergenceRow, SweepResult};
use crate::engine::Trajectory;
use crate::error::Result;

pub enum Artifact<'a> {
    Trajectory(&'a Trajectory),
    Sweep(&'a SweepResult),
    Convergence(&'a [ConvergenceRow]),
}

pub const TRAJECTORY_COLUMNS: [&str; 8] = [
    "t",
    "q",
    "i",
    "regime",
    "cycle",
    "E_cap",
    "E_ind",
    "E_dissipated",
];

pub const SWEEP_DERIVED_COLUMNS: [&str; 10] = [
    "omega",
    "tau_omega",
    "tau_i",
    "valid",
    "phase",
    "ratio",
    "q_final_norm",
    "bound_norm",
    "dev_cosine",
    "dev_envelope",
];

pub const CONVERGENCE_COLUMNS: [&str; 5] = ["N", "q_norm", "deficit", "bound_norm", "envelope_dev"];

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn emit(artifact: Artifact<'_>, format: Format, out: &mut dyn Write) -> Result<()> {
    match (artifact, format) {
        (Artifact::Trajectory(t), Format::Csv) => trajectory_csv(t, out)?,
        (Artifact::Sweep(s), Format::Csv) => sweep_csv(s, out)?,
        (Artifact::Convergence(rows), Format::Csv) => convergence_csv(rows, out)?,
        (Artifact::Trajectory(t), Format::Json) => json_out(&json!({ "samples": t.samples }), out)?,
        (Artifact::Sweep(s), Format::Json) => json_out(&sweep_json(s), out)?,
        (Artifact::Convergence(rows), Format::Json) => json_out(&json!({ "rows": rows }), out)?,
    }
    out.flush()?;
    Ok(())
}

fn json_out(v: &serde_json::Value, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(|e| crate::Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn trajectory_csv(t: &Trajectory, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{}", TRAJECTORY_COLUMNS.join(","))?;
    for s in &t.samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.q),
            fmt_f64(s.i),
            s.regime.as_str(),
            s.cycle,
            fmt_f64(s.e_cap),
            fmt_f64(s.e_ind),
            fmt_f64(s.e_dissipated)
        )?;
    }
    Ok(())
}

fn sweep_csv(s: &SweepResult, out: &mut dyn Write) -> std::io::Result<()> {
    let mut header: Vec<&str> = ParamName::ALL.iter().map(|p| p.key()).collect();
    header.extend(SWEEP_DERIVED_COLUMNS);
    writeln!(out, "{}", header.join(","))?;
    for r in &s.records {
        let mut row: Vec<String> = r.params.iter().map(|x| fmt_f64(*x)).collect();
        row.push(fmt_opt(r.omega));
        row.push(fmt_opt(r.tau_omega));
        row.push(fmt_opt(r.tau_i));
        row.push(r.valid.to_string());
        row.push(r.phase.map(|p| p.as_str().to_string()).unwrap_or_default());
        row.push(fmt_opt(r.ratio));
        row.push(fmt_opt(r.q_final_norm));
        row.push(fmt_opt(r.bound_norm));
        row.push(fmt_opt(r.dev_cosine));
        row.push(fmt_opt(r.dev_envelope));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn sweep_json(s: &SweepResult) -> serde_json::Value {
    let records: Vec<serde_json::Value> = s
        .records
        .iter()
        .map(|r| {
            let params: serde_json::Map<String, serde_json::Value> = ParamName::ALL
                .iter()
                .map(|p| (p.key().to_string(), json!(r.params[p.index()])))
                .collect();
            json!({
                "params": params,
                "omega": r.omega,
                "tau_omega": r.tau_omega,
                "tau_i": r.tau_i,
                "valid": r.valid,
                "failed_checks": r.failed_checks,
                "phase": r.phase,
                "ratio": r.ratio,
                "q_final_norm": r.q_final_norm,
                "bound_norm": r.bound_norm,
                "dev_cosine": r.dev_cosine,
                "dev_envelope": r.dev_envelope,
                "error": r.error,
            })
        })
        .collect();
    json!({
        "axes": s.axes,
        "mode": s.mode,
        "margin": s.margin,
        "records": records,
    })
}

fn convergence_csv(rows: &[ConvergenceRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{}", CONVERGENCE_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            fmt_f64(r.q_norm),
            fmt_f64(r.deficit),
            fmt_opt(r.bound_norm),
            fmt_f64(r.envelope_dev)
        )?;
    }
    Ok(())
}

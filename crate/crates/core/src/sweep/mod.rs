//! Parameter sweeps and N-convergence studies.

pub mod config;
pub mod emit;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{charge_bound, run_switched, EngineMode, SamplingPolicy};
use crate::error::{Error, Result};
use crate::model::{derive_scales, validate_regime, CircuitParams, SwitchSchedule};
use crate::phase::{anti_zeno_limit, classify_phase, deviation_metrics, Phase};

pub use config::{parse_config, Axis, Format, Outputs, ParamName, SweepConfig};
pub use emit::{emit, Artifact};

/// One grid point, with every outcome that could be computed for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    /// Values of `L, C, q0, i0, T, N, tr_ratio`, in that order.
    pub params: [f64; 7],
    pub omega: Option<f64>,
    pub tau_omega: Option<f64>,
    pub tau_i: Option<f64>,
    pub valid: bool,
    pub failed_checks: Vec<&'static str>,
    pub phase: Option<Phase>,
    pub ratio: Option<f64>,
    pub q_final_norm: Option<f64>,
    pub bound_norm: Option<f64>,
    pub dev_cosine: Option<f64>,
    pub dev_envelope: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    pub mode: EngineMode,
    pub margin: f64,
    pub records: Vec<PointRecord>,
}

fn build(values: &[f64; 7]) -> Result<(CircuitParams, SwitchSchedule)> {
    let [l, c, q0, i0, t, n, r] = *values;
    let params = CircuitParams::new(l, c, q0, i0)?;
    if !(n >= 1.0 && n.fract() == 0.0 && n <= u64::MAX as f64) {
        return Err(Error::InvalidParameter {
            name: "N",
            reason: format!("must be a positive integer, got {n}"),
        });
    }
    let schedule = SwitchSchedule::new(t, n as u64, r)?;
    Ok((params, schedule))
}

/// Validate, classify and simulate a single parameter point. Failures are
/// recorded, never raised.
pub fn evaluate_point(
    values: [f64; 7],
    mode: &EngineMode,
    margin: f64,
    sampling: &SamplingPolicy,
) -> PointRecord {
    let mut rec = PointRecord {
        params: values,
        omega: None,
        tau_omega: None,
        tau_i: None,
        valid: false,
        failed_checks: Vec::new(),
        phase: None,
        ratio: None,
        q_final_norm: None,
        bound_norm: None,
        dev_cosine: None,
        dev_envelope: None,
        error: None,
    };
    let (params, schedule) = match build(&values) {
        Ok(x) => x,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let scales = derive_scales(&params);
    rec.omega = Some(scales.omega);
    rec.tau_omega = Some(scales.tau_omega);
    rec.tau_i = Some(scales.tau_i);

    let validity = validate_regime(&params, &schedule, margin);
    rec.valid = validity.ok;
    rec.failed_checks = validity.failed().map(|c| c.name).collect();

    match classify_phase(&params, &schedule, margin) {
        Ok(report) => {
            rec.phase = Some(report.phase);
            rec.ratio = Some(report.ratio);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec.bound_norm = charge_bound(&params, &schedule).ok().map(|b| b / params.q0);

    match run_switched(&params, &schedule, mode, sampling) {
        Ok(traj) => {
            let m = deviation_metrics(&traj, &params, &schedule);
            rec.q_final_norm = traj.final_charge().map(|q| q / params.q0);
            rec.dev_cosine = Some(m.cosine.endpoint / params.q0);
            rec.dev_envelope = Some(m.envelope.endpoint / params.q0);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Grid points in row-major order over the axes (last axis fastest).
pub fn grid_points(config: &SweepConfig) -> Vec<[f64; 7]> {
    let mut base = [0.0; 7];
    for (p, x) in &config.fixed {
        base[p.index()] = *x;
    }
    let mut points = vec![base];
    for axis in &config.axes {
        points = points
            .into_iter()
            .flat_map(|pt| {
                axis.values.iter().map(move |&x| {
                    let mut q = pt;
                    q[axis.param.index()] = x;
                    q
                })
            })
            .collect();
    }
    points
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let sampling = SamplingPolicy::new(config.outputs.samples, true)?;
    let points = grid_points(config);
    let eval = |v: &[f64; 7]| evaluate_point(*v, &config.mode, config.margin, &sampling);
    let records = if config.outputs.parallel {
        points.par_iter().map(eval).collect()
    } else {
        points.iter().map(eval).collect()
    };
    Ok(SweepResult {
        axes: config.axes.clone(),
        mode: config.mode.clone(),
        margin: config.margin,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub q_norm: f64,
    /// `1 - q(T)/q0`.
    pub deficit: f64,
    pub bound_norm: Option<f64>,
    /// `q(T)/q0` minus the exponential envelope at `T`.
    pub envelope_dev: f64,
}

/// Final charge against N for a fixed circuit and horizon.
pub fn convergence_study(
    params: &CircuitParams,
    horizon: f64,
    cycles: &[u64],
    off_on_ratio: f64,
    mode: &EngineMode,
) -> Result<Vec<ConvergenceRow>> {
    if cycles.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("N", "cycle counts must be strictly ascending"));
    }
    let envelope = anti_zeno_limit(params, horizon) / params.q0;
    cycles
        .iter()
        .map(|&n| {
            let schedule = SwitchSchedule::new(horizon, n, off_on_ratio)?;
            let traj = run_switched(params, &schedule, mode, &SamplingPolicy::default())?;
            let q_norm = traj.final_charge().expect("nonempty trajectory") / params.q0;
            Ok(ConvergenceRow {
                n,
                q_norm,
                deficit: 1.0 - q_norm,
                bound_norm: charge_bound(params, &schedule).ok().map(|b| b / params.q0),
                envelope_dev: q_norm - envelope,
            })
        })
        .collect()
}

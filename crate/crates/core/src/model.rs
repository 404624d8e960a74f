//! Physical types of the switched LC/LR circuit and the closed-form
//! single-segment propagators for its two regimes.
//!
//! Sign convention: the capacitor starts charged (`q0 > 0`) and the
//! discharge current is negative (`i0 <= 0`). Currents are stored signed;
//! magnitudes are taken only where a formula is written in terms of `|i0|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Circuit constants and the prepared initial condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub inductance: f64,
    pub capacitance: f64,
    pub q0: f64,
    pub i0: f64,
}

impl CircuitParams {
    pub fn new(inductance: f64, capacitance: f64, q0: f64, i0: f64) -> Result<Self> {
        if !(inductance.is_finite() && inductance > 0.0) {
            return Err(Error::param(
                "L",
                format!("must be finite and > 0, got {inductance}"),
            ));
        }
        if !(capacitance.is_finite() && capacitance > 0.0) {
            return Err(Error::param(
                "C",
                format!("must be finite and > 0, got {capacitance}"),
            ));
        }
        if !(q0.is_finite() && q0 > 0.0) {
            return Err(Error::param(
                "q0",
                format!("must be finite and > 0, got {q0}"),
            ));
        }
        if !(i0.is_finite() && i0 <= 0.0) {
            return Err(Error::param(
                "i0",
                format!("must be finite and <= 0, got {i0}"),
            ));
        }
        Ok(Self {
            inductance,
            capacitance,
            q0,
            i0,
        })
    }

    pub fn omega(&self) -> f64 {
        1.0 / (self.inductance * self.capacitance).sqrt()
    }

    pub fn initial_state(&self) -> CircuitState {
        CircuitState {
            t: 0.0,
            q: self.q0,
            i: self.i0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    pub omega: f64,
    pub tau_omega: f64,
    /// `|q0/i0|`; infinite when the initial current is zero.
    pub tau_i: f64,
}

pub fn derive_scales(params: &CircuitParams) -> DerivedScales {
    let omega = params.omega();
    let tau_i = if params.i0 == 0.0 {
        f64::INFINITY
    } else {
        (params.q0 / params.i0).abs()
    };
    DerivedScales {
        omega,
        tau_omega: 1.0 / omega,
        tau_i,
    }
}

/// N identical ON/OFF cycles filling `[0, T]`.
///
/// The ON and OFF durations are built from the period and the ratio
/// `T_R / T_C`, so that `T_C + T_R == T / N` holds in floating point for
/// ratios up to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchSchedule {
    pub horizon: f64,
    pub cycles: u64,
    pub on_duration: f64,
    pub off_duration: f64,
}

impl SwitchSchedule {
    /// A ratio of zero is the ideal instantaneous reset (`T_C = T/N`).
    pub fn new(horizon: f64, cycles: u64, off_on_ratio: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::param(
                "T",
                format!("must be finite and >= 0, got {horizon}"),
            ));
        }
        if cycles == 0 {
            return Err(Error::param("N", "must be a positive integer"));
        }
        if !(off_on_ratio.is_finite() && off_on_ratio >= 0.0) {
            return Err(Error::param(
                "tr_ratio",
                format!("must be finite and >= 0, got {off_on_ratio}"),
            ));
        }
        let period = horizon / cycles as f64;
        let on_duration = period / (1.0 + off_on_ratio);
        let off_duration = period - on_duration;
        Ok(Self {
            horizon,
            cycles,
            on_duration,
            off_duration,
        })
    }

    pub fn period(&self) -> f64 {
        self.on_duration + self.off_duration
    }

    /// Start time of cycle `k`; `cycle_start(N) == T`.
    pub fn cycle_start(&self, k: u64) -> f64 {
        if k >= self.cycles {
            self.horizon
        } else {
            self.horizon * (k as f64) / (self.cycles as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitState {
    pub t: f64,
    pub q: f64,
    pub i: f64,
}

impl CircuitState {
    pub fn new(t: f64, q: f64, i: f64) -> Self {
        Self { t, q, i }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityCheck {
    pub name: &'static str,
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub ok: bool,
    pub checks: Vec<ValidityCheck>,
}

impl ValidityReport {
    pub fn failed(&self) -> impl Iterator<Item = &ValidityCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }
}

pub const DEFAULT_MARGIN: f64 = 0.1;

/// Checks the short-time approximation regime. Each `a << b` is rendered
/// as `a <= margin * b`; the initial-current limit and the horizon check
/// are strict inequalities without margin.
pub fn validate_regime(
    params: &CircuitParams,
    schedule: &SwitchSchedule,
    margin: f64,
) -> ValidityReport {
    let scales = derive_scales(params);
    let period = schedule.horizon / schedule.cycles as f64;
    let mut checks = vec![
        ValidityCheck {
            name: "period_vs_tau_omega",
            satisfied: period <= margin * scales.tau_omega,
            lhs: period,
            rhs: margin * scales.tau_omega,
        },
        ValidityCheck {
            name: "off_vs_on_duration",
            satisfied: schedule.off_duration <= margin * schedule.on_duration,
            lhs: schedule.off_duration,
            rhs: margin * schedule.on_duration,
        },
    ];
    let limit = 0.5 * params.q0 * scales.omega;
    checks.push(ValidityCheck {
        name: "initial_current_limit",
        satisfied: params.i0.abs() < limit,
        lhs: params.i0.abs(),
        rhs: limit,
    });
    checks.push(ValidityCheck {
        name: "horizon_vs_tau_omega",
        satisfied: schedule.horizon < scales.tau_omega,
        lhs: schedule.horizon,
        rhs: scales.tau_omega,
    });
    ValidityReport {
        ok: checks.iter().all(|c| c.satisfied),
        checks,
    }
}

/// Closed LC loop evolved with the exact harmonic solution.
pub fn lc_segment_exact(state: CircuitState, omega: f64, dt: f64) -> CircuitState {
    let (s, c) = (omega * dt).sin_cos();
    let q = if omega == 0.0 {
        state.q + state.i * dt
    } else {
        state.q * c + (state.i / omega) * s
    };
    CircuitState {
        t: state.t + dt,
        q,
        i: -state.q * omega * s + state.i * c,
    }
}

/// Second-order short-time expansion of the LC solution. The current is
/// the derivative of the charge polynomial.
pub fn lc_segment_quadratic(state: CircuitState, omega: f64, dt: f64) -> CircuitState {
    let w2 = omega * omega;
    CircuitState {
        t: state.t + dt,
        q: state.q + state.i * dt - 0.5 * state.q * w2 * dt * dt,
        i: state.i - state.q * w2 * dt,
    }
}

/// What the inductor is shunted through while the switch is OFF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Resistance {
    Ohms(f64),
    /// Infinite resistance: the inductor is disconnected and its current
    /// drops to zero.
    Open,
    /// Zero-duration reset (`T_R = 0`, `R -> inf` with `R T_R / L` fixed):
    /// the current lands on `target` instantly.
    Ideal {
        target: f64,
    },
}

impl Resistance {
    pub fn ohms(&self) -> f64 {
        match *self {
            Resistance::Ohms(r) => r,
            Resistance::Open | Resistance::Ideal { .. } => f64::INFINITY,
        }
    }
}

/// Current through the shunted inductor after `dt` in the OFF regime.
/// The capacitor is disconnected, so its charge does not change.
pub fn lr_segment(i_at_switch: f64, resistance: Resistance, inductance: f64, dt: f64) -> f64 {
    match resistance {
        Resistance::Ohms(r) if r == 0.0 || dt == 0.0 => i_at_switch,
        Resistance::Ohms(r) => i_at_switch * (-(r / inductance) * dt).exp(),
        Resistance::Open => 0.0,
        Resistance::Ideal { target } => target,
    }
}

/// Resistance that resets the first-cycle current back to `i0` under the
/// quadratic current law, `R = (L/T_R) ln(q0 w^2 T_C / |i0| + 1)`.
pub fn select_r_first_order(params: &CircuitParams, on: f64, off: f64) -> Result<Resistance> {
    if params.i0 == 0.0 {
        return Ok(Resistance::Open);
    }
    let omega = params.omega();
    let excess = params.q0 * omega * omega * on / params.i0.abs();
    if excess == 0.0 {
        return Ok(Resistance::Ohms(0.0));
    }
    if off == 0.0 {
        return Err(Error::ZeroResetDuration {
            argument: excess + 1.0,
        });
    }
    Ok(Resistance::Ohms(params.inductance / off * excess.ln_1p()))
}

/// Resistance that decays `i_at_tc` onto `target` in exactly `off` seconds.
pub fn select_r_exact(i_at_tc: f64, target: f64, inductance: f64, off: f64) -> Result<Resistance> {
    if i_at_tc == target {
        return Ok(Resistance::Ohms(0.0));
    }
    let unreachable = || Error::UnreachableReset {
        at_switch: i_at_tc.abs(),
        target: target.abs(),
    };
    if target == 0.0 || i_at_tc.signum() != target.signum() || i_at_tc.abs() < target.abs() {
        return Err(unreachable());
    }
    if off == 0.0 {
        return Ok(Resistance::Ideal { target });
    }
    let excess = (i_at_tc - target) / target;
    Ok(Resistance::Ohms(inductance / off * excess.ln_1p()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub capacitor: f64,
    pub inductor: f64,
}

impl Energies {
    pub fn total(&self) -> f64 {
        self.capacitor + self.inductor
    }
}

pub fn energies(state: &CircuitState, params: &CircuitParams) -> Energies {
    Energies {
        capacitor: state.q * state.q / (2.0 * params.capacitance),
        inductor: 0.5 * params.inductance * state.i * state.i,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub capacitor: f64,
    pub inductor: f64,
    pub dissipated: f64,
}

impl EnergyLedger {
    pub fn total(&self) -> f64 {
        self.capacitor + self.inductor + self.dissipated
    }
}

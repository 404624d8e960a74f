//! The N-cycle ON/OFF switching protocol.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{
    energies, lc_segment_exact, lr_segment, CircuitParams, CircuitState, Resistance, SwitchSchedule,
};
use crate::strategy::{self, Propagator, ResetPolicy};

/// A propagator and a reset policy, resolved from the strategy registry.
#[derive(Clone)]
pub struct EngineMode {
    pub evolution: Arc<dyn Propagator>,
    pub reset: Arc<dyn ResetPolicy>,
}

impl EngineMode {
    pub fn from_names(evolution: &str, reset: &str) -> Result<Self> {
        Ok(Self {
            evolution: strategy::propagator(evolution)?,
            reset: strategy::reset_policy(reset)?,
        })
    }

    /// The physically exact realization.
    pub fn exact() -> Self {
        Self::from_names("exact", "percycle").expect("builtin strategies")
    }

    /// The short-time construction: quadratic segments, one fixed resistance.
    pub fn quadratic_fixed() -> Self {
        Self::from_names("quadratic", "fixed").expect("builtin strategies")
    }

    pub fn label(&self) -> String {
        format!("{}+{}", self.evolution.name(), self.reset.name())
    }
}

impl Default for EngineMode {
    fn default() -> Self {
        Self::exact()
    }
}

impl fmt::Debug for EngineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EngineMode")
            .field("evolution", &self.evolution.name())
            .field("reset", &self.reset.name())
            .finish()
    }
}

impl PartialEq for EngineMode {
    fn eq(&self, other: &Self) -> bool {
        self.evolution.name() == other.evolution.name() && self.reset.name() == other.reset.name()
    }
}

impl Serialize for EngineMode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("EngineMode", 2)?;
        st.serialize_field("evolution", self.evolution.name())?;
        st.serialize_field("reset", self.reset.name())?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Regime {
    On,
    Off,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::On => "ON",
            Regime::Off => "OFF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub q: f64,
    pub i: f64,
    pub regime: Regime,
    pub cycle: u64,
    #[serde(rename = "E_cap")]
    pub e_cap: f64,
    #[serde(rename = "E_ind")]
    pub e_ind: f64,
    #[serde(rename = "E_dissipated")]
    pub e_dissipated: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplingPolicy {
    pub per_segment_points: usize,
    /// Record the switch instants themselves. Without endpoints only
    /// interior points are kept, plus the first and last sample of the run.
    pub include_endpoints: bool,
}

impl SamplingPolicy {
    pub fn new(per_segment_points: usize, include_endpoints: bool) -> Result<Self> {
        if per_segment_points == 0 {
            return Err(Error::param("samples", "per-segment points must be >= 1"));
        }
        Ok(Self {
            per_segment_points,
            include_endpoints,
        })
    }

    /// Offsets into a segment of length `dt` at which samples are taken.
    /// The last offset is exactly `dt` when endpoints are included.
    pub(crate) fn offsets(&self, dt: f64) -> Vec<f64> {
        let k = self.per_segment_points;
        if self.include_endpoints {
            (1..=k)
                .map(|j| if j == k { dt } else { dt * j as f64 / k as f64 })
                .collect()
        } else {
            (1..=k).map(|j| dt * j as f64 / (k + 1) as f64).collect()
        }
    }
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        Self {
            per_segment_points: 1,
            include_endpoints: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Circuit state at the end of each completed cycle.
    #[serde(skip)]
    pub cycle_ends: Vec<CircuitState>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn final_charge(&self) -> Option<f64> {
        self.last().map(|s| s.q)
    }

    /// Charge at the start of every cycle followed by the final charge:
    /// `q0, q_1, ..., q_N`. Needs the initial charge since a trajectory
    /// may start mid-protocol.
    pub fn cycle_charges(&self, q0: f64) -> Vec<f64> {
        std::iter::once(q0)
            .chain(self.cycle_ends.iter().map(|s| s.q))
            .collect()
    }
}

pub(crate) fn sample(
    state: &CircuitState,
    params: &CircuitParams,
    regime: Regime,
    cycle: u64,
    dissipated: f64,
) -> Sample {
    let e = energies(state, params);
    Sample {
        t: state.t,
        q: state.q,
        i: state.i,
        regime,
        cycle,
        e_cap: e.capacitor,
        e_ind: e.inductor,
        e_dissipated: dissipated,
    }
}

/// Result of one ON/OFF cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleOutcome {
    pub end: CircuitState,
    pub at_switch: CircuitState,
    pub resistance: Resistance,
    /// Energy dumped into the shunt during this cycle's OFF segment.
    pub dissipated: f64,
    pub samples: Vec<Sample>,
}

pub struct SwitchEngine {
    pub params: CircuitParams,
    pub schedule: SwitchSchedule,
    pub mode: EngineMode,
    pub sampling: SamplingPolicy,
}

impl SwitchEngine {
    pub fn new(
        params: CircuitParams,
        schedule: SwitchSchedule,
        mode: EngineMode,
        sampling: SamplingPolicy,
    ) -> Self {
        Self {
            params,
            schedule,
            mode,
            sampling,
        }
    }

    /// Runs cycle `k` from `state`. Sample energies carry
    /// `dissipated_before` plus this cycle's running dissipation.
    pub fn run_cycle(
        &self,
        state: CircuitState,
        k: u64,
        dissipated_before: f64,
    ) -> Result<CycleOutcome> {
        let p = &self.params;
        let sch = &self.schedule;
        let omega = p.omega();
        let start_t = sch.cycle_start(k);
        let switch_t = start_t + sch.on_duration;
        let end_t = sch.cycle_start(k + 1);
        let start = CircuitState {
            t: start_t,
            ..state
        };

        let mut samples = Vec::new();
        if sch.on_duration > 0.0 {
            for dt in self.sampling.offsets(sch.on_duration) {
                let mut s = self.mode.evolution.advance(start, omega, dt);
                if dt == sch.on_duration {
                    s.t = switch_t;
                }
                samples.push(sample(&s, p, Regime::On, k, dissipated_before));
            }
        }
        let mut at_switch = self.mode.evolution.advance(start, omega, sch.on_duration);
        at_switch.t = switch_t;

        let resistance = self.mode.reset.resistance(p, sch, &start, &at_switch)?;
        let l = p.inductance;
        let i_end = lr_segment(at_switch.i, resistance, l, sch.off_duration);
        let dissipated = 0.5 * l * (at_switch.i * at_switch.i - i_end * i_end);
        let end = CircuitState {
            t: end_t,
            q: at_switch.q,
            i: i_end,
        };

        if sch.off_duration > 0.0 {
            for dt in self.sampling.offsets(sch.off_duration) {
                let (t, i) = if dt == sch.off_duration {
                    (end_t, i_end)
                } else {
                    (switch_t + dt, lr_segment(at_switch.i, resistance, l, dt))
                };
                let d = 0.5 * l * (at_switch.i * at_switch.i - i * i);
                let s = CircuitState {
                    t,
                    q: at_switch.q,
                    i,
                };
                samples.push(sample(&s, p, Regime::Off, k, dissipated_before + d));
            }
        } else if self.sampling.include_endpoints && sch.on_duration > 0.0 {
            // zero-length reset: the switch-instant sample shows the post-reset state
            if let Some(last) = samples.last_mut() {
                *last = sample(&end, p, Regime::Off, k, dissipated_before + dissipated);
            }
        }

        Ok(CycleOutcome {
            end,
            at_switch,
            resistance,
            dissipated,
            samples,
        })
    }

    pub fn run(&self) -> Result<Trajectory> {
        let p = &self.params;
        let mut state = p.initial_state();
        let mut dissipated = 0.0;
        let mut samples = vec![sample(&state, p, Regime::On, 0, 0.0)];
        let mut cycle_ends = Vec::with_capacity(self.schedule.cycles as usize);
        for k in 0..self.schedule.cycles {
            let out = self.run_cycle(state, k, dissipated)?;
            dissipated += out.dissipated;
            state = out.end;
            samples.extend(out.samples);
            cycle_ends.push(out.end);
        }
        close_trajectory(&mut samples, &state, p, self.schedule.cycles, dissipated);
        Ok(Trajectory {
            samples,
            cycle_ends,
        })
    }
}

/// Guarantees the run ends with a sample at `t = T` showing the final state.
pub(crate) fn close_trajectory(
    samples: &mut Vec<Sample>,
    end: &CircuitState,
    params: &CircuitParams,
    cycles: u64,
    dissipated: f64,
) {
    let last_t = samples.last().map(|s| s.t).unwrap_or(f64::NEG_INFINITY);
    if end.t > last_t {
        samples.push(sample(end, params, Regime::Off, cycles - 1, dissipated));
    } else if end.t == last_t {
        let regime = samples.last().map(|s| s.regime).unwrap_or(Regime::Off);
        let cycle = samples.last().map(|s| s.cycle).unwrap_or(0);
        *samples.last_mut().expect("nonempty") = sample(end, params, regime, cycle, dissipated);
    }
}

pub fn run_switched(
    params: &CircuitParams,
    schedule: &SwitchSchedule,
    mode: &EngineMode,
    sampling: &SamplingPolicy,
) -> Result<Trajectory> {
    SwitchEngine::new(*params, *schedule, mode.clone(), *sampling).run()
}

/// The un-switched LC circuit over `[0, t_end]`, as a single ON segment.
pub fn run_unswitched(
    params: &CircuitParams,
    t_end: f64,
    sampling: &SamplingPolicy,
) -> Result<Trajectory> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::param(
            "T_end",
            format!("must be finite and >= 0, got {t_end}"),
        ));
    }
    let s0 = params.initial_state();
    let omega = params.omega();
    let mut samples = vec![sample(&s0, params, Regime::On, 0, 0.0)];
    if t_end > 0.0 {
        let offsets = if sampling.include_endpoints {
            sampling.offsets(t_end)
        } else {
            let mut o = sampling.offsets(t_end);
            o.push(t_end);
            o
        };
        for dt in offsets {
            let s = lc_segment_exact(s0, omega, dt);
            samples.push(sample(&s, params, Regime::On, 0, 0.0));
        }
    }
    Ok(Trajectory {
        samples,
        cycle_ends: Vec::new(),
    })
}

/// Upper bound on the final charge obtained by inducting the short-time
/// expansion over N cycles of length `T/N`:
/// `q0 [1 - w^2 (T/N)^2 / 2 - (|i0|/q0)(T/N)]^N`.
pub fn charge_bound(params: &CircuitParams, schedule: &SwitchSchedule) -> Result<f64> {
    let period = schedule.horizon / schedule.cycles as f64;
    let omega = params.omega();
    let bracket =
        1.0 - 0.5 * omega * omega * period * period - (params.i0.abs() / params.q0) * period;
    if bracket < 0.0 {
        return Err(Error::BoundInapplicable { bracket });
    }
    Ok(params.q0 * bracket.powf(schedule.cycles as f64))
}

//! Interchangeable pieces of the switching protocol.
//!
//! A [`Propagator`] evolves the closed LC loop over an ON segment; a
//! [`ResetPolicy`] picks the shunt resistance for the OFF segment that
//! follows. Both are registered by name so a run can be assembled from
//! configuration or command-line flags.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::model::{
    lc_segment_exact, lc_segment_quadratic, select_r_exact, select_r_first_order, CircuitParams,
    CircuitState, Resistance, SwitchSchedule,
};

pub trait Propagator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Evolve `state` through `dt` seconds of the closed LC loop.
    fn advance(&self, state: CircuitState, omega: f64, dt: f64) -> CircuitState;
}

pub trait ResetPolicy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Shunt resistance for the OFF segment of a cycle which started at
    /// `cycle_start` and reached the switch instant at `at_switch`.
    fn resistance(
        &self,
        params: &CircuitParams,
        schedule: &SwitchSchedule,
        cycle_start: &CircuitState,
        at_switch: &CircuitState,
    ) -> Result<Resistance>;
}

pub struct ExactPropagator;

impl Propagator for ExactPropagator {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn advance(&self, state: CircuitState, omega: f64, dt: f64) -> CircuitState {
        lc_segment_exact(state, omega, dt)
    }
}

pub struct QuadraticPropagator;

impl Propagator for QuadraticPropagator {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn advance(&self, state: CircuitState, omega: f64, dt: f64) -> CircuitState {
        lc_segment_quadratic(state, omega, dt)
    }
}

/// One resistance for the whole run, chosen from the `t = 0` values so that
/// the first quadratic-mode cycle lands back on `i0`. Later cycles reset
/// only approximately.
pub struct FixedResistance;

impl ResetPolicy for FixedResistance {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn resistance(
        &self,
        params: &CircuitParams,
        schedule: &SwitchSchedule,
        _cycle_start: &CircuitState,
        _at_switch: &CircuitState,
    ) -> Result<Resistance> {
        select_r_first_order(params, schedule.on_duration, schedule.off_duration)
    }
}

/// Re-selects the resistance every cycle so the current lands on `i0`.
pub struct PerCycleExact;

impl ResetPolicy for PerCycleExact {
    fn name(&self) -> &'static str {
        "percycle"
    }

    fn resistance(
        &self,
        params: &CircuitParams,
        schedule: &SwitchSchedule,
        _cycle_start: &CircuitState,
        at_switch: &CircuitState,
    ) -> Result<Resistance> {
        if params.i0 == 0.0 {
            return Ok(Resistance::Open);
        }
        select_r_exact(
            at_switch.i,
            params.i0,
            params.inductance,
            schedule.off_duration,
        )
    }
}

/// Resets the current to `i0 * q / q0`, keeping the relative discharge
/// rate `|i| / q` at its initial value. With the quadratic propagator each
/// cycle multiplies the charge by `1 - (|i0|/q0) T_C - w^2 T_C^2 / 2`, so
/// the charge-bound product is realized with equality.
pub struct Proportional;

impl ResetPolicy for Proportional {
    fn name(&self) -> &'static str {
        "proportional"
    }

    fn resistance(
        &self,
        params: &CircuitParams,
        schedule: &SwitchSchedule,
        _cycle_start: &CircuitState,
        at_switch: &CircuitState,
    ) -> Result<Resistance> {
        if params.i0 == 0.0 {
            return Ok(Resistance::Open);
        }
        let target = params.i0 * (at_switch.q / params.q0);
        select_r_exact(
            at_switch.i,
            target,
            params.inductance,
            schedule.off_duration,
        )
    }
}

struct Registry {
    propagators: RwLock<BTreeMap<String, Arc<dyn Propagator>>>,
    resets: RwLock<BTreeMap<String, Arc<dyn ResetPolicy>>>,
}

fn registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut propagators: BTreeMap<String, Arc<dyn Propagator>> = BTreeMap::new();
        for p in [
            Arc::new(ExactPropagator) as Arc<dyn Propagator>,
            Arc::new(QuadraticPropagator),
        ] {
            propagators.insert(p.name().to_string(), p);
        }
        let mut resets: BTreeMap<String, Arc<dyn ResetPolicy>> = BTreeMap::new();
        for r in [
            Arc::new(FixedResistance) as Arc<dyn ResetPolicy>,
            Arc::new(PerCycleExact),
            Arc::new(Proportional),
        ] {
            resets.insert(r.name().to_string(), r);
        }
        Registry {
            propagators: RwLock::new(propagators),
            resets: RwLock::new(resets),
        }
    })
}

pub fn register_propagator(p: Arc<dyn Propagator>) {
    registry()
        .propagators
        .write()
        .expect("propagator registry poisoned")
        .insert(p.name().to_string(), p);
}

pub fn register_reset_policy(r: Arc<dyn ResetPolicy>) {
    registry()
        .resets
        .write()
        .expect("reset registry poisoned")
        .insert(r.name().to_string(), r);
}

pub fn propagator(name: &str) -> Result<Arc<dyn Propagator>> {
    let map = registry()
        .propagators
        .read()
        .expect("propagator registry poisoned");
    map.get(name)
        .cloned()
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "propagator",
            name: name.to_string(),
            known: map.keys().cloned().collect::<Vec<_>>().join(", "),
        })
}

pub fn reset_policy(name: &str) -> Result<Arc<dyn ResetPolicy>> {
    let map = registry().resets.read().expect("reset registry poisoned");
    map.get(name)
        .cloned()
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "reset",
            name: name.to_string(),
            known: map.keys().cloned().collect::<Vec<_>>().join(", "),
        })
}

pub fn propagator_names() -> Vec<String> {
    registry()
        .propagators
        .read()
        .expect("propagator registry poisoned")
        .keys()
        .cloned()
        .collect()
}

pub fn reset_policy_names() -> Vec<String> {
    registry()
        .resets
        .read()
        .expect("reset registry poisoned")
        .keys()
        .cloned()
        .collect()
}

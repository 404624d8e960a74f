//! Simulation and analysis of a rapidly switched LC/LR circuit.
//!
//! The capacitor-inductor loop is closed (ON) for `T_C`, then the inductor
//! is shunted through a resistor (OFF) for `T_R` while the capacitor sits
//! disconnected; the shunt resets the inductor current, and the cycle
//! repeats `N` times inside `[0, T]`. Frequent switching with a negligible
//! initial current freezes the capacitor charge (Zeno); a dominant initial
//! current drives a discharge faster than the exponential it limits to
//! (anti-Zeno).
//!
//! Segment propagators and current-reset policies are interchangeable
//! strategies looked up by name in [`strategy`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod model;
pub mod oracle;
pub mod phase;
pub mod strategy;
pub mod sweep;

pub use engine::{
    charge_bound, run_switched, run_unswitched, EngineMode, Regime, Sample, SamplingPolicy,
    SwitchEngine, Trajectory,
};
pub use error::{Error, Result};
pub use model::{
    derive_scales, energies, lc_segment_exact, lc_segment_quadratic, lr_segment, select_r_exact,
    select_r_first_order, validate_regime, CircuitParams, CircuitState, DerivedScales, Energies,
    EnergyLedger, Resistance, SwitchSchedule, ValidityCheck, ValidityReport, DEFAULT_MARGIN,
};
pub use phase::{
    anti_zeno_limit, classify_generic, classify_phase, deviation_metrics, zeno_limit,
    DeviationMetrics, GenericZenoCriteria, Phase, PhaseReport, UniversalityClass,
    UniversalityQuery,
};
pub use strategy::{Propagator, ResetPolicy};

//! Phase classification, limit laws and deviation metrics.

use std::fmt;

use serde::Serialize;

use crate::engine::Trajectory;
use crate::error::{Error, Result};
use crate::model::{lc_segment_exact, CircuitParams, SwitchSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Zeno,
    AntiZeno,
    Intermediate,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Zeno => "Zeno",
            Phase::AntiZeno => "AntiZeno",
            Phase::Intermediate => "Intermediate",
        }
    }

    /// `ratio <= margin` is Zeno, `ratio >= 1/margin` is anti-Zeno.
    pub fn from_ratio(ratio: f64, margin: f64) -> Phase {
        if ratio <= margin {
            Phase::Zeno
        } else if ratio >= 1.0 / margin {
            Phase::AntiZeno
        } else {
            Phase::Intermediate
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseReport {
    pub phase: Phase,
    /// Linear discharge rate over the quadratic curvature term per cycle.
    pub ratio: f64,
    pub margin: f64,
    /// Set when the curvature term vanishes while the linear rate does not.
    pub degenerate: bool,
}

fn check_margin(margin: f64) -> Result<()> {
    if margin > 0.0 && margin < 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "margin",
            format!("must lie in (0, 1), got {margin}"),
        ))
    }
}

/// Compares `|i0|` against `q0 w^2 (T/N) / 2`.
pub fn classify_phase(
    params: &CircuitParams,
    schedule: &SwitchSchedule,
    margin: f64,
) -> Result<PhaseReport> {
    check_margin(margin)?;
    let omega = params.omega();
    let period = schedule.horizon / schedule.cycles as f64;
    let scale = 0.5 * params.q0 * omega * omega * period;
    let current = params.i0.abs();
    Ok(report(current, scale, margin))
}

fn report(num: f64, den: f64, margin: f64) -> PhaseReport {
    let (ratio, degenerate) = if num == 0.0 {
        (0.0, false)
    } else if den == 0.0 {
        (f64::INFINITY, true)
    } else {
        (num / den, false)
    };
    PhaseReport {
        phase: Phase::from_ratio(ratio, margin),
        ratio,
        margin,
        degenerate,
    }
}

/// An observable that evolves as `R0 (1 - a t - b t^2)` between meddling
/// events, each of which renormalizes the linear rate to `a_prime`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenericZenoCriteria {
    pub r0: f64,
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub horizon: f64,
    pub cycles: u64,
}

impl GenericZenoCriteria {
    pub fn new(r0: f64, a: f64, b: f64, a_prime: f64, horizon: f64, cycles: u64) -> Result<Self> {
        if !(a >= 0.0 && a_prime >= a) {
            return Err(Error::param(
                "a_prime",
                format!("need a_prime >= a >= 0, got a={a}, a'={a_prime}"),
            ));
        }
        if !(b >= 0.0) {
            return Err(Error::param("b", format!("must be >= 0, got {b}")));
        }
        if !(horizon >= 0.0) || cycles == 0 {
            return Err(Error::param("T", "need T >= 0 and N >= 1"));
        }
        Ok(Self {
            r0,
            a,
            b,
            a_prime,
            horizon,
            cycles,
        })
    }

    /// The LC/LR instance: `a = a' = |i0|/q0`, `b = w^2 / 2`.
    pub fn from_circuit(params: &CircuitParams, schedule: &SwitchSchedule) -> Self {
        let a = params.i0.abs() / params.q0;
        let omega = params.omega();
        Self {
            r0: params.q0,
            a,
            b: 0.5 * omega * omega,
            a_prime: a,
            horizon: schedule.horizon,
            cycles: schedule.cycles,
        }
    }
}

/// Compares `a'` against `b T/N`.
pub fn classify_generic(c: &GenericZenoCriteria, margin: f64) -> Result<PhaseReport> {
    check_margin(margin)?;
    let den = c.b * (c.horizon / c.cycles as f64);
    Ok(report(c.a_prime, den, margin))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZenoLimit {
    /// The N -> infinity charge, `q0`.
    pub limit: f64,
    /// First-order relative deficit `w^2 T^2 / (2N)` at finite N.
    pub relative_deficit: f64,
}

pub fn zeno_limit(params: &CircuitParams, schedule: &SwitchSchedule) -> ZenoLimit {
    let omega = params.omega();
    let t = schedule.horizon;
    ZenoLimit {
        limit: params.q0,
        relative_deficit: 0.5 * omega * omega * t * t / schedule.cycles as f64,
    }
}

/// Exponential envelope `q0 exp(-(|i0|/q0) t)` approached by the anti-Zeno
/// discharge.
pub fn anti_zeno_limit(params: &CircuitParams, t: f64) -> f64 {
    params.q0 * (-(params.i0.abs() / params.q0) * t).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UniversalityClass {
    /// `delta > 1`: the product tends to 1.
    Unity,
    /// `delta = 1`: the product tends to `e^x`.
    Exponential,
    /// `delta < 1`: the product diverges.
    Divergent,
}

/// `[1 + (x/N)^delta]^N`, evaluated in the log domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniversalityQuery {
    pub x: f64,
    pub delta: f64,
    pub n: f64,
}

impl UniversalityQuery {
    pub fn new(x: f64, delta: f64, n: f64) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::param("x", format!("must be > 0, got {x}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param("delta", format!("must be > 0, got {delta}")));
        }
        if !(n >= 1.0) {
            return Err(Error::param("N", format!("must be >= 1, got {n}")));
        }
        Ok(Self { x, delta, n })
    }

    pub fn log_value(&self) -> f64 {
        self.n * (self.x / self.n).powf(self.delta).ln_1p()
    }

    pub fn value(&self) -> f64 {
        self.log_value().exp()
    }

    pub fn class(&self) -> UniversalityClass {
        if self.delta > 1.0 {
            UniversalityClass::Unity
        } else if self.delta == 1.0 {
            UniversalityClass::Exponential
        } else {
            UniversalityClass::Divergent
        }
    }

    /// Log of the N -> infinity limit: 0, `x`, or `+inf`.
    pub fn limit_log(&self) -> f64 {
        match self.class() {
            UniversalityClass::Unity => 0.0,
            UniversalityClass::Exponential => self.x,
            UniversalityClass::Divergent => f64::INFINITY,
        }
    }
}

pub fn universality_log_value(q: &UniversalityQuery) -> f64 {
    q.log_value()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DeviationStats {
    pub max: f64,
    pub min: f64,
    pub endpoint: f64,
}

impl DeviationStats {
    fn from_series(series: impl Iterator<Item = f64>) -> Self {
        let mut out: Option<DeviationStats> = None;
        for d in series {
            out = Some(match out {
                None => DeviationStats {
                    max: d,
                    min: d,
                    endpoint: d,
                },
                Some(s) => DeviationStats {
                    max: s.max.max(d),
                    min: s.min.min(d),
                    endpoint: d,
                },
            });
        }
        out.unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationMetrics {
    /// `q(t)` minus the un-switched LC charge; positive means slower discharge.
    pub cosine: DeviationStats,
    /// `q(t)` minus the exponential envelope; negative means faster discharge.
    pub envelope: DeviationStats,
    /// `q_k - q_{k+1}` for each cycle.
    pub cycle_decrements: Vec<f64>,
    /// Second difference of the cycle-boundary charges over `(T/N)^2`:
    /// the curvature of the concatenated curve.
    pub cycle_curvature: Vec<f64>,
}

pub fn deviation_metrics(
    traj: &Trajectory,
    params: &CircuitParams,
    schedule: &SwitchSchedule,
) -> DeviationMetrics {
    let s0 = params.initial_state();
    let omega = params.omega();
    let cosine = DeviationStats::from_series(
        traj.samples
            .iter()
            .map(|s| s.q - lc_segment_exact(s0, omega, s.t).q),
    );
    let envelope = DeviationStats::from_series(
        traj.samples
            .iter()
            .map(|s| s.q - anti_zeno_limit(params, s.t)),
    );
    let charges = traj.cycle_charges(params.q0);
    let cycle_decrements = charges.windows(2).map(|w| w[0] - w[1]).collect();
    let period = schedule.horizon / schedule.cycles as f64;
    let cycle_curvature = if period > 0.0 {
        charges
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]) / (period * period))
            .collect()
    } else {
        Vec::new()
    };
    DeviationMetrics {
        cosine,
        envelope,
        cycle_decrements,
        cycle_curvature,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_switched, EngineMode, SamplingPolicy};
    use proptest::prelude::*;

    fn unit(i0: f64) -> CircuitParams {
        CircuitParams::new(1.0, 1.0, 1.0, i0).unwrap()
    }

    #[test]
    fn phase_examples() {
        let s = SwitchSchedule::new(0.1, 100, 0.01).unwrap();
        let r = classify_phase(&unit(0.0), &s, 0.1).unwrap();
        assert_eq!((r.phase, r.ratio), (Phase::Zeno, 0.0));

        // |i0| / (q0 w^2 (T/N) / 2) = 1 / 5e-4
        let r = classify_phase(&unit(-1.0), &s, 0.1).unwrap();
        assert_eq!(r.phase, Phase::AntiZeno);
        assert!((r.ratio - 2000.0).abs() < 1e-9);

        // 1e-3 * 1/2 = 5e-4
        let r = classify_phase(&unit(-5e-4), &s, 0.1).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
        assert_eq!(r.phase, Phase::Intermediate);
        assert_eq!(Phase::from_ratio(1.0, 0.1), Phase::Intermediate);
        assert_eq!(Phase::from_ratio(0.1, 0.1), Phase::Zeno);
        assert_eq!(Phase::from_ratio(10.0, 0.1), Phase::AntiZeno);

        assert!(classify_phase(&unit(0.0), &s, 1.0).is_err());
        assert!(classify_phase(&unit(0.0), &s, 0.0).is_err());
    }

    #[test]
    fn generic_examples() {
        let c = GenericZenoCriteria::new(1.0, 0.0, 0.5, 0.0, 0.1, 10).unwrap();
        assert_eq!(classify_generic(&c, 0.1).unwrap().phase, Phase::Zeno);

        let c = GenericZenoCriteria::new(1.0, 0.0, 0.5, 0.005, 0.1, 10).unwrap();
        let r = classify_generic(&c, 0.1).unwrap();
        assert_eq!(r.phase, Phase::Intermediate);
        assert!((r.ratio - 1.0).abs() < 1e-12);

        let c = GenericZenoCriteria::new(1.0, 0.1, 0.0, 0.2, 0.1, 10).unwrap();
        let r = classify_generic(&c, 0.1).unwrap();
        assert!(r.degenerate && r.phase == Phase::AntiZeno);

        assert!(GenericZenoCriteria::new(1.0, 0.2, 0.1, 0.1, 0.1, 10).is_err());
        assert!(GenericZenoCriteria::new(1.0, 0.0, -0.1, 0.1, 0.1, 10).is_err());
    }

    #[test]
    fn zeno_limit_examples() {
        let z = zeno_limit(&unit(0.0), &SwitchSchedule::new(0.1, 1000, 0.01).unwrap());
        assert_eq!(z.limit, 1.0);
        assert!((z.relative_deficit - 5e-6).abs() < 1e-18);
        let z = zeno_limit(&unit(0.0), &SwitchSchedule::new(0.0, 1000, 0.01).unwrap());
        assert_eq!(z.relative_deficit, 0.0);
        let mut last = f64::INFINITY;
        for n in [10, 100, 1000, 10_000, 100_000] {
            let z = zeno_limit(&unit(0.0), &SwitchSchedule::new(0.1, n, 0.01).unwrap());
            assert!(z.relative_deficit < last);
            last = z.relative_deficit;
        }
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(anti_zeno_limit(&unit(-1.0), 0.0), 1.0);
        assert!((anti_zeno_limit(&unit(-1.0), 0.05) - 0.951_229_424_500_714).abs() < 1e-15);
        assert_eq!(anti_zeno_limit(&unit(0.0), 0.3), 1.0);
    }

    #[test]
    fn universality_examples() {
        let n = 1e6;
        let q = UniversalityQuery::new(1.0, 2.0, n).unwrap();
        assert!((q.log_value() - 1e-6).abs() < 1e-15);
        assert_eq!(q.class(), UniversalityClass::Unity);
        let q = UniversalityQuery::new(1.0, 1.0, n).unwrap();
        let e = std::f64::consts::E;
        assert!((q.value() - e).abs() / e < 1e-5);
        assert_eq!(q.limit_log(), 1.0);
        let q = UniversalityQuery::new(1.0, 0.5, n).unwrap();
        // N^(1 - delta) x^delta ~ 1000, minus the second-order term
        assert!((q.log_value() - 999.500_333_083_533).abs() < 1e-8);
        assert!(q.limit_log().is_infinite());
        assert!(UniversalityQuery::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn deviation_examples() {
        let p = unit(0.0);
        let s = SwitchSchedule::new(0.5, 50, 0.01).unwrap();
        let t = run_switched(
            &p,
            &s,
            &EngineMode::exact(),
            &SamplingPolicy::new(3, true).unwrap(),
        )
        .unwrap();
        let m = deviation_metrics(&t, &p, &s);
        assert!(m.cosine.min >= 0.0);
        assert!(m.cosine.endpoint > 0.0);
        assert_eq!(m.cycle_decrements.len(), 50);
        assert_eq!(m.cycle_curvature.len(), 49);

        // quadratic with a negligible w-term: N = 10, |i0|/q0 = 1, T = 0.5
        let p = CircuitParams::new(1e6, 1e6, 1.0, -1.0).unwrap();
        let s = SwitchSchedule::new(0.5, 10, 0.0).unwrap();
        let mode = EngineMode::from_names("quadratic", "proportional").unwrap();
        let t = run_switched(&p, &s, &mode, &SamplingPolicy::default()).unwrap();
        let m = deviation_metrics(&t, &p, &s);
        assert!((t.final_charge().unwrap() - 0.598_736_939_238_378_9).abs() < 1e-9);
        assert!(m.envelope.endpoint < 0.0);
        assert!(
            (m.envelope.endpoint - (0.598_736_939_238_378_9 - 0.606_530_659_712_633_4)).abs()
                < 1e-9
        );
        // the concatenation of straight segments bends upward like the envelope
        assert!(m.cycle_curvature.iter().all(|&c| c > 0.0));

        let s = SwitchSchedule::new(0.0, 1, 0.01).unwrap();
        let t = run_switched(&p, &s, &EngineMode::exact(), &SamplingPolicy::default()).unwrap();
        let m = deviation_metrics(&t, &p, &s);
        assert_eq!(m.cosine, DeviationStats::default());
        assert_eq!(m.envelope, DeviationStats::default());
    }

    proptest! {
        #[test]
        fn generic_matches_circuit(
            l in 0.1f64..10.0, c in 0.1f64..10.0, q0 in 0.1f64..10.0,
            i_frac in 0.0f64..0.49, t_frac in 0.01f64..0.9, n in 1u64..100_000,
        ) {
            let p0 = CircuitParams::new(l, c, q0, 0.0).unwrap();
            let w = p0.omega();
            let p = CircuitParams::new(l, c, q0, -i_frac * q0 * w).unwrap();
            let s = SwitchSchedule::new(t_frac / w, n, 0.01).unwrap();
            let a = classify_phase(&p, &s, 0.1).unwrap();
            let b = classify_generic(&GenericZenoCriteria::from_circuit(&p, &s), 0.1).unwrap();
            prop_assert_eq!(a.phase, b.phase);
            prop_assert!((a.ratio - b.ratio).abs() <= 1e-12 * a.ratio.abs());
        }

        #[test]
        fn universality_decreasing_in_delta(
            x in 0.01f64..10.0, n in 10.0f64..1e6, d1 in 0.1f64..3.0, d2 in 0.1f64..3.0,
        ) {
            prop_assume!((d1 - d2).abs() > 1e-3);
            prop_assume!(x < n);
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let a = UniversalityQuery::new(x, lo, n).unwrap().log_value();
            let b = UniversalityQuery::new(x, hi, n).unwrap().log_value();
            prop_assert!(a > b);
        }

        #[test]
        fn linear_decrement_below_envelope(a in 0.01f64..5.0, t in 0.01f64..1.0, n in 1u64..2000) {
            prop_assume!(a * t / (n as f64) < 1.0);
            let p = CircuitParams::new(1e8, 1e8, 1.0, -a).unwrap();
            let s = SwitchSchedule::new(t, n, 0.0).unwrap();
            let mode = EngineMode::from_names("quadratic", "proportional").unwrap();
            let q = run_switched(&p, &s, &mode, &SamplingPolicy::default()).unwrap()
                .final_charge().unwrap();
            let closed = (1.0 - a * t / n as f64).powi(n as i32);
            prop_assert!((q - closed).abs() < 1e-12);
            prop_assert!(q <= anti_zeno_limit(&p, t));
        }
    }
}

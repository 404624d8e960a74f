//! Fixed-step RK4 replay of the switching protocol.
//!
//! Used to certify the closed-form propagators and full switched runs. The
//! integrator never steps across a switch instant: each segment is covered
//! by whole steps of size `h` plus one final partial step.

use serde::Serialize;

use crate::engine::{close_trajectory, sample, Regime, SamplingPolicy, Trajectory};
use crate::error::{Error, Result};
use crate::model::{CircuitParams, CircuitState, Resistance, SwitchSchedule};
use crate::strategy::ResetPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    pub step: f64,
    pub tolerance: f64,
}

impl OracleConfig {
    pub fn new(step: f64, tolerance: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::param("step", format!("must be > 0, got {step}")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::param("tol", format!("must be > 0, got {tolerance}")));
        }
        Ok(Self { step, tolerance })
    }

    /// `h = min(T_C, T_R) / 100`, ignoring zero-length segments.
    pub fn for_schedule(schedule: &SwitchSchedule, tolerance: f64) -> Result<Self> {
        let shortest = [schedule.on_duration, schedule.off_duration]
            .into_iter()
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let step = if shortest.is_finite() {
            shortest / 100.0
        } else {
            1.0
        };
        Self::new(step, tolerance)
    }
}

/// Whole steps of `h` then a partial step for the remainder, unless the
/// remainder is below one part in 1e9 of `h`.
fn stepped<S: Copy>(mut y: S, dt: f64, h: f64, step: impl Fn(S, f64) -> S) -> S {
    if dt <= 0.0 {
        return y;
    }
    let whole = (dt / h).floor();
    for _ in 0..whole as u64 {
        y = step(y, h);
    }
    let rest = dt - whole * h;
    if rest > 1e-9 * h {
        y = step(y, rest);
    }
    y
}

/// RK4 on `q' = i, i' = -w^2 q`.
pub fn rk4_lc(state: CircuitState, omega: f64, dt: f64, h: f64) -> CircuitState {
    let w2 = omega * omega;
    let f = |q: f64, i: f64| (i, -w2 * q);
    let (q, i) = stepped((state.q, state.i), dt, h, |(q, i), h| {
        let k1 = f(q, i);
        let k2 = f(q + 0.5 * h * k1.0, i + 0.5 * h * k1.1);
        let k3 = f(q + 0.5 * h * k2.0, i + 0.5 * h * k2.1);
        let k4 = f(q + h * k3.0, i + h * k3.1);
        (
            q + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            i + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    });
    CircuitState {
        t: state.t + dt,
        q,
        i,
    }
}

/// RK4 on `i' = -rate * i`.
pub fn rk4_lr(current: f64, decay_rate: f64, dt: f64, h: f64) -> f64 {
    if decay_rate == 0.0 {
        return current;
    }
    let f = |i: f64| -decay_rate * i;
    stepped(current, dt, h, |i, h| {
        let k1 = f(i);
        let k2 = f(i + 0.5 * h * k1);
        let k3 = f(i + 0.5 * h * k2);
        let k4 = f(i + h * k3);
        i + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    })
}

fn shunt(current: f64, r: Resistance, inductance: f64, dt: f64, h: f64) -> f64 {
    match r {
        Resistance::Ohms(ohms) => rk4_lr(current, ohms / inductance, dt, h),
        Resistance::Open => 0.0,
        Resistance::Ideal { target } => target,
    }
}

/// Replays the protocol with numerically integrated segments, on the same
/// switching instants and sample grid as the closed-form engine.
pub fn oracle_trajectory(
    params: &CircuitParams,
    schedule: &SwitchSchedule,
    reset: &dyn ResetPolicy,
    config: &OracleConfig,
    sampling: &SamplingPolicy,
) -> Result<Trajectory> {
    let omega = params.omega();
    let h = config.step;
    let l = params.inductance;
    let mut state = params.initial_state();
    let mut dissipated = 0.0;
    let mut samples = vec![sample(&state, params, Regime::On, 0, 0.0)];
    let mut cycle_ends = Vec::new();

    for k in 0..schedule.cycles {
        let start_t = schedule.cycle_start(k);
        let switch_t = start_t + schedule.on_duration;
        let end_t = schedule.cycle_start(k + 1);
        let start = CircuitState {
            t: start_t,
            ..state
        };

        // integrate sample-to-sample so every grid point is hit exactly
        let mut cur = start;
        let mut done = 0.0;
        if schedule.on_duration > 0.0 {
            for dt in sampling.offsets(schedule.on_duration) {
                cur = rk4_lc(cur, omega, dt - done, h);
                done = dt;
                cur.t = if dt == schedule.on_duration {
                    switch_t
                } else {
                    start_t + dt
                };
                samples.push(sample(&cur, params, Regime::On, k, dissipated));
            }
        }
        let mut at_switch = rk4_lc(cur, omega, schedule.on_duration - done, h);
        at_switch.t = switch_t;

        let r = reset.resistance(params, schedule, &start, &at_switch)?;
        let i_sw = at_switch.i;
        let mut i = i_sw;
        let mut done = 0.0;
        if schedule.off_duration > 0.0 {
            for dt in sampling.offsets(schedule.off_duration) {
                i = shunt(i, r, l, dt - done, h);
                done = dt;
                let t = if dt == schedule.off_duration {
                    end_t
                } else {
                    switch_t + dt
                };
                let s = CircuitState {
                    t,
                    q: at_switch.q,
                    i,
                };
                let d = 0.5 * l * (i_sw * i_sw - i * i);
                samples.push(sample(&s, params, Regime::Off, k, dissipated + d));
            }
        }
        i = shunt(i, r, l, schedule.off_duration - done, h);
        let end = CircuitState {
            t: end_t,
            q: at_switch.q,
            i,
        };
        let cycle_loss = 0.5 * l * (i_sw * i_sw - i * i);
        if schedule.off_duration == 0.0 && sampling.include_endpoints && schedule.on_duration > 0.0
        {
            if let Some(last) = samples.last_mut() {
                *last = sample(&end, params, Regime::Off, k, dissipated + cycle_loss);
            }
        }
        dissipated += cycle_loss;
        state = end;
        cycle_ends.push(end);
    }
    close_trajectory(&mut samples, &state, params, schedule.cycles, dissipated);
    Ok(Trajectory {
        samples,
        cycle_ends,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    pub max_rel_q: f64,
    pub mean_rel_q: f64,
    pub max_rel_i: f64,
    pub mean_rel_i: f64,
    pub samples: usize,
}

impl ErrorStats {
    pub fn max(&self) -> f64 {
        self.max_rel_q.max(self.max_rel_i)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max() <= tolerance
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Pointwise relative errors between two trajectories on the same grid.
pub fn compare(a: &Trajectory, b: &Trajectory) -> Result<ErrorStats> {
    if a.samples.len() != b.samples.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} samples",
            a.samples.len(),
            b.samples.len()
        )));
    }
    let mut stats = ErrorStats {
        max_rel_q: 0.0,
        mean_rel_q: 0.0,
        max_rel_i: 0.0,
        mean_rel_i: 0.0,
        samples: a.samples.len(),
    };
    for (idx, (x, y)) in a.samples.iter().zip(&b.samples).enumerate() {
        if x.t != y.t || x.regime != y.regime || x.cycle != y.cycle {
            return Err(Error::GridMismatch(format!(
                "sample {idx}: (t={}, {}, cycle {}) vs (t={}, {}, cycle {})",
                x.t,
                x.regime.as_str(),
                x.cycle,
                y.t,
                y.regime.as_str(),
                y.cycle
            )));
        }
        let eq = rel_err(x.q, y.q);
        let ei = rel_err(x.i, y.i);
        stats.max_rel_q = stats.max_rel_q.max(eq);
        stats.max_rel_i = stats.max_rel_i.max(ei);
        stats.mean_rel_q += eq;
        stats.mean_rel_i += ei;
    }
    if stats.samples > 0 {
        stats.mean_rel_q /= stats.samples as f64;
        stats.mean_rel_i /= stats.samples as f64;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_switched, EngineMode};
    use crate::model::{lc_segment_exact, lr_segment, select_r_exact};
    use crate::strategy::PerCycleExact;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn rk4_identities() {
        let s = CircuitState::new(0.0, 0.7, -0.2);
        assert_eq!(rk4_lc(s, 1.0, 0.0, 1e-3), s);
        assert_eq!(rk4_lr(-0.3, 5.0, 0.0, 1e-3), -0.3);
        assert_eq!(rk4_lr(-0.3, 0.0, 1.0, 1e-3), -0.3);
    }

    #[test]
    fn rk4_quarter_period() {
        let s = rk4_lc(CircuitState::new(0.0, 1.0, 0.0), 1.0, FRAC_PI_2, 1e-4);
        assert!(s.q.abs() < 1e-12, "{}", s.q);
        assert!((s.t - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn rk4_decay_hits_target() {
        let i = rk4_lr(-0.11, 1.1f64.ln() * 1000.0, 1e-3, 1e-6);
        assert!((i + 0.1).abs() / 0.1 < 1e-10);
    }

    #[test]
    fn rk4_agrees_with_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let s = CircuitState::new(0.0, rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let dt = rng.gen_range(0.0..1.0);
            let a = rk4_lc(s, 1.0, dt, 1e-4);
            let b = lc_segment_exact(s, 1.0, dt);
            let scale = s.q.hypot(s.i);
            assert!((a.q - b.q).abs() / scale < 1e-10);
            assert!((a.i - b.i).abs() / scale < 1e-10);
        }
    }

    #[test]
    fn single_cycle_is_composition() {
        let p = CircuitParams::new(1.0, 1.0, 1.0, -0.1).unwrap();
        let s = SwitchSchedule::new(0.011, 1, 0.1).unwrap();
        let h = 1e-5;
        let traj = oracle_trajectory(
            &p,
            &s,
            &PerCycleExact,
            &OracleConfig::new(h, 1e-8).unwrap(),
            &SamplingPolicy::default(),
        )
        .unwrap();
        let on = rk4_lc(p.initial_state(), 1.0, s.on_duration, h);
        let r = select_r_exact(on.i, p.i0, p.inductance, s.off_duration).unwrap();
        let i = rk4_lr(on.i, r.ohms(), s.off_duration, h);
        let end = traj.cycle_ends[0];
        assert_eq!(end.q, on.q);
        assert_eq!(end.i, i);
        assert!((lr_segment(on.i, r, 1.0, s.off_duration) - i).abs() < 1e-12);
    }

    #[test]
    fn zeno_run_agrees_with_engine() {
        let p = CircuitParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let s = SwitchSchedule::new(0.1, 100, 0.01).unwrap();
        let cfg = OracleConfig::new(s.on_duration / 100.0, 1e-9).unwrap();
        let sp = SamplingPolicy::default();
        let o = oracle_trajectory(&p, &s, &PerCycleExact, &cfg, &sp).unwrap();
        let e = run_switched(&p, &s, &EngineMode::exact(), &sp).unwrap();
        let q_o = o.final_charge().unwrap();
        let q_e = e.final_charge().unwrap();
        assert!((q_o - q_e).abs() / q_e < 1e-9);
        assert!(compare(&o, &e).unwrap().passes(1e-9));
    }

    #[test]
    fn fourth_order_convergence() {
        let p = CircuitParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let s = SwitchSchedule::new(1.0, 1, 0.01).unwrap();
        let sp = SamplingPolicy::default();
        let exact = run_switched(&p, &s, &EngineMode::exact(), &sp)
            .unwrap()
            .final_charge()
            .unwrap();
        let errs: Vec<f64> = [8.0, 16.0, 32.0]
            .iter()
            .map(|m| {
                let cfg = OracleConfig::new(s.on_duration / m, 1.0).unwrap();
                let q = oracle_trajectory(&p, &s, &PerCycleExact, &cfg, &sp)
                    .unwrap()
                    .final_charge()
                    .unwrap();
                (q - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio >= 14.0, "{errs:?}");
            // within a factor of 2 of h^4
            assert!((8.0..=32.0).contains(&ratio), "{errs:?}");
        }
    }

    #[test]
    fn compare_rejects_mismatch() {
        let p = CircuitParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let sp = SamplingPolicy::default();
        let a = run_switched(
            &p,
            &SwitchSchedule::new(0.1, 10, 0.01).unwrap(),
            &EngineMode::exact(),
            &sp,
        )
        .unwrap();
        let b = run_switched(
            &p,
            &SwitchSchedule::new(0.1, 11, 0.01).unwrap(),
            &EngineMode::exact(),
            &sp,
        )
        .unwrap();
        assert!(compare(&a, &b).is_err());
        let c = run_switched(
            &p,
            &SwitchSchedule::new(0.2, 10, 0.01).unwrap(),
            &EngineMode::exact(),
            &sp,
        )
        .unwrap();
        assert!(matches!(compare(&a, &c), Err(Error::GridMismatch(_))));
        let z = compare(&a, &a).unwrap();
        assert_eq!((z.max_rel_q, z.max_rel_i, z.mean_rel_q), (0.0, 0.0, 0.0));
    }

    #[test]
    fn quadratic_vs_exact_drift() {
        // w T_C = 0.01: per-cycle q error ~ |i0| w^2 T_C^3 / 6 relative to q
        let p = CircuitParams::new(1.0, 1.0, 1.0, -0.1).unwrap();
        let s = SwitchSchedule::new(1.0, 99, 0.01).unwrap();
        assert!((s.on_duration - 0.01).abs() < 1e-5);
        let sp = SamplingPolicy::default();
        let mut errs = Vec::new();
        for n in [10u64, 20, 40] {
            let s = SwitchSchedule::new(s.period() * n as f64, n, 0.01).unwrap();
            let a = run_switched(&p, &s, &EngineMode::exact(), &sp).unwrap();
            let b = run_switched(
                &p,
                &s,
                &EngineMode::from_names("quadratic", "percycle").unwrap(),
                &sp,
            )
            .unwrap();
            let qa = a.final_charge().unwrap();
            let qb = b.final_charge().unwrap();
            errs.push((qa - qb).abs() / qa);
        }
        assert!(errs[0] / 10.0 <= 1e-6);
        // roughly linear growth in cycle count
        assert!((1.6..=2.6).contains(&(errs[1] / errs[0])), "{errs:?}");
        assert!((1.6..=2.6).contains(&(errs[2] / errs[1])), "{errs:?}");
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use zeno_core::oracle::{compare, oracle_trajectory, OracleConfig};
use zeno_core::strategy::reset_policy;
use zeno_core::sweep::{self, convergence_study, emit, parse_config, Artifact, Format};
use zeno_core::{
    anti_zeno_limit, classify_generic, classify_phase, derive_scales, run_switched,
    validate_regime, zeno_limit, CircuitParams, EngineMode, GenericZenoCriteria, SamplingPolicy,
    SwitchSchedule, UniversalityQuery, DEFAULT_MARGIN,
};

/// Switched LC/LR circuit simulator.
#[derive(Parser)]
#[command(name = "zeno", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one switched run and write its trajectory.
    Simulate {
        #[command(flatten)]
        physics: Physics,
        #[command(flatten)]
        mode: ModeArgs,
        /// Samples per ON/OFF segment.
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Run a parameter sweep described by a TOML document.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `outputs.format` from the document.
        #[arg(long)]
        format: Option<Format>,
        /// Evaluate points on a single thread.
        #[arg(long)]
        serial: bool,
    },
    /// Print validity checks and the phase of a parameter point.
    Classify {
        #[command(flatten)]
        physics: Physics,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
    },
    /// Print the N -> infinity limits and the universality table.
    Limits {
        #[command(flatten)]
        physics: Physics,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        /// N used in the universality table (defaults to --N).
        #[arg(long = "un")]
        universality_n: Option<f64>,
    },
    /// Compare the closed-form engine against an RK4 replay.
    OracleCheck {
        #[command(flatten)]
        physics: Physics,
        /// RK4 step; defaults to min(T_C, T_R)/100.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value = "percycle")]
        reset: String,
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// Final charge against N for a fixed circuit and horizon.
    Converge {
        #[command(flatten)]
        physics: Physics,
        #[command(flatten)]
        mode: ModeArgs,
        /// Ascending cycle counts.
        #[arg(long = "Ns", value_delimiter = ',', required = true)]
        n_list: Vec<u64>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Physics {
    #[arg(long = "L", default_value_t = 1.0)]
    inductance: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    capacitance: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    q0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    i0: f64,
    #[arg(long = "T", default_value_t = 0.1)]
    horizon: f64,
    #[arg(long = "N", default_value_t = 100)]
    cycles: u64,
    /// T_R / T_C.
    #[arg(long, default_value_t = sweep::config::DEFAULT_TR_RATIO)]
    tr_ratio: f64,
}

impl Physics {
    fn build(&self) -> zeno_core::Result<(CircuitParams, SwitchSchedule)> {
        let p = CircuitParams::new(self.inductance, self.capacitance, self.q0, self.i0)?;
        let s = SwitchSchedule::new(self.horizon, self.cycles, self.tr_ratio)?;
        Ok((p, s))
    }
}

#[derive(Args)]
struct ModeArgs {
    #[arg(long, default_value = "exact")]
    mode: String,
    #[arg(long, default_value = "percycle")]
    reset: String,
}

impl ModeArgs {
    fn build(&self) -> zeno_core::Result<EngineMode> {
        EngineMode::from_names(&self.mode, &self.reset)
    }
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

/// Failure classes, mapped onto the process exit code.
enum Failure {
    Check(anyhow::Error),
    Config(anyhow::Error),
}

impl Failure {
    fn check(e: impl Into<anyhow::Error>) -> Self {
        Failure::Check(e.into())
    }
    fn config(e: impl Into<anyhow::Error>) -> Self {
        Failure::Config(e.into())
    }
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn warn_invalid(params: &CircuitParams, schedule: &SwitchSchedule) {
    for c in validate_regime(params, schedule, DEFAULT_MARGIN).failed() {
        eprintln!(
            "warning: {} not satisfied ({:e} vs {:e})",
            c.name, c.lhs, c.rhs
        );
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            physics,
            mode,
            samples,
            output,
        } => {
            let (p, s) = physics.build().map_err(Failure::check)?;
            let mode = mode.build().map_err(Failure::config)?;
            let sampling = SamplingPolicy::new(samples, true).map_err(Failure::config)?;
            warn_invalid(&p, &s);
            let traj = run_switched(&p, &s, &mode, &sampling).map_err(Failure::check)?;
            let mut out = open_out(output.out.as_deref()).map_err(Failure::config)?;
            emit(Artifact::Trajectory(&traj), output.format, &mut out).map_err(Failure::check)?;
        }
        Command::Sweep {
            config,
            out,
            format,
            serial,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("cannot read {}", config.display()))
                .map_err(Failure::config)?;
            let mut cfg = parse_config(&text)
                .with_context(|| config.display().to_string())
                .map_err(Failure::config)?;
            if serial {
                cfg.outputs.parallel = false;
            }
            let format = format.unwrap_or(cfg.outputs.format);
            let result = sweep::run_sweep(&cfg).map_err(Failure::config)?;
            let mut w = open_out(out.as_deref()).map_err(Failure::config)?;
            emit(Artifact::Sweep(&result), format, &mut w).map_err(Failure::check)?;
        }
        Command::Classify { physics, margin } => {
            let (p, s) = physics.build().map_err(Failure::check)?;
            let report = classify_phase(&p, &s, margin).map_err(Failure::check)?;
            let generic = classify_generic(&GenericZenoCriteria::from_circuit(&p, &s), margin)
                .map_err(Failure::check)?;
            let validity = validate_regime(&p, &s, margin);
            print_json(&json!({
                "phase": report,
                "generic": generic,
                "scales": derive_scales(&p),
                "validity": validity,
            }));
            if !validity.ok {
                return Err(Failure::check(anyhow::anyhow!(
                    "outside the short-time regime: {}",
                    validity
                        .failed()
                        .map(|c| c.name)
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
        }
        Command::Limits {
            physics,
            delta,
            x,
            universality_n,
        } => {
            let (p, s) = physics.build().map_err(Failure::check)?;
            let n = universality_n.unwrap_or(s.cycles as f64);
            let table = delta
                .iter()
                .map(|&d| {
                    let q = UniversalityQuery::new(x, d, n)?;
                    Ok(json!({
                        "delta": d,
                        "class": q.class(),
                        "log_value": q.log_value(),
                        "value": q.value(),
                        "limit_log": q.limit_log(),
                    }))
                })
                .collect::<zeno_core::Result<Vec<_>>>()
                .map_err(Failure::check)?;
            print_json(&json!({
                "zeno": zeno_limit(&p, &s),
                "anti_zeno": { "t": s.horizon, "envelope": anti_zeno_limit(&p, s.horizon) },
                "universality": { "x": x, "N": n, "table": table },
            }));
        }
        Command::OracleCheck {
            physics,
            step,
            tol,
            reset,
            samples,
        } => {
            let (p, s) = physics.build().map_err(Failure::check)?;
            let policy = reset_policy(&reset).map_err(Failure::config)?;
            let config = match step {
                Some(h) => OracleConfig::new(h, tol),
                None => OracleConfig::for_schedule(&s, tol),
            }
            .map_err(Failure::config)?;
            let sampling = SamplingPolicy::new(samples, true).map_err(Failure::config)?;
            let mode = EngineMode::from_names("exact", &reset).map_err(Failure::config)?;
            let engine = run_switched(&p, &s, &mode, &sampling).map_err(Failure::check)?;
            let oracle = oracle_trajectory(&p, &s, policy.as_ref(), &config, &sampling)
                .map_err(Failure::check)?;
            let stats = compare(&engine, &oracle).map_err(Failure::check)?;
            let pass = stats.passes(tol);
            print_json(&json!({
                "step": config.step,
                "tolerance": tol,
                "stats": stats,
                "pass": pass,
            }));
            if !pass {
                return Err(Failure::check(anyhow::anyhow!(
                    "max relative error {:e} exceeds {:e}",
                    stats.max(),
                    tol
                )));
            }
        }
        Command::Converge {
            physics,
            mode,
            n_list,
            output,
        } => {
            let (p, _) = physics.build().map_err(Failure::check)?;
            let mode = mode.build().map_err(Failure::config)?;
            let rows = convergence_study(&p, physics.horizon, &n_list, physics.tr_ratio, &mode)
                .map_err(Failure::check)?;
            let mut out = open_out(output.out.as_deref()).map_err(Failure::config)?;
            emit(Artifact::Convergence(&rows), output.format, &mut out).map_err(Failure::check)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}

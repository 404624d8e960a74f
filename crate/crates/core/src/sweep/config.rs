//! Sweep configuration documents.
//!
//! A document is TOML with four sections plus a top-level `margin`:
//!
//! ```toml
//! margin = 0.1                 # optional, default 0.1
//!
//! [mode]                       # optional, default exact + percycle
//! evolution = "exact"          # any registered propagator
//! reset = "percycle"           # any registered reset policy
//!
//! [fixed]                      # parameters held constant
//! L = 1.0
//! C = 1.0
//! q0 = 1.0
//! T = 0.1
//! tr_ratio = 0.01              # optional, default 0.01
//!
//! [axes.i0]                    # swept parameters, in declaration order
//! spacing = "linear"           # linear | log
//! min = 0.0
//! max = -0.49
//! count = 20
//!
//! [axes.N]
//! values = [10, 100, 1000]     # or an explicit grid
//!
//! [outputs]                    # optional
//! format = "csv"               # csv | json
//! samples = 1                  # samples per ON/OFF segment
//! parallel = true
//! ```
//!
//! Every parameter of `L, C, q0, i0, T, N, tr_ratio` must appear exactly
//! once, either under `[fixed]` or as an axis (`tr_ratio` may be omitted).
//! Unknown keys are rejected.

use std::fmt;

use serde::Serialize;
use toml::{Table, Value};

use crate::engine::EngineMode;
use crate::error::{Error, Result};
use crate::model::DEFAULT_MARGIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ParamName {
    #[serde(rename = "L")]
    Inductance,
    #[serde(rename = "C")]
    Capacitance,
    #[serde(rename = "q0")]
    Q0,
    #[serde(rename = "i0")]
    I0,
    #[serde(rename = "T")]
    Horizon,
    #[serde(rename = "N")]
    Cycles,
    #[serde(rename = "tr_ratio")]
    OffOnRatio,
}

impl ParamName {
    pub const ALL: [ParamName; 7] = [
        ParamName::Inductance,
        ParamName::Capacitance,
        ParamName::Q0,
        ParamName::I0,
        ParamName::Horizon,
        ParamName::Cycles,
        ParamName::OffOnRatio,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            ParamName::Inductance => "L",
            ParamName::Capacitance => "C",
            ParamName::Q0 => "q0",
            ParamName::I0 => "i0",
            ParamName::Horizon => "T",
            ParamName::Cycles => "N",
            ParamName::OffOnRatio => "tr_ratio",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.key() == key)
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub param: ParamName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::config(
                "outputs.format",
                format!("expected csv or json, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outputs {
    pub format: Format,
    pub samples: usize,
    pub parallel: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            format: Format::Csv,
            samples: 1,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub axes: Vec<Axis>,
    pub fixed: Vec<(ParamName, f64)>,
    pub mode: EngineMode,
    pub margin: f64,
    pub outputs: Outputs,
}

impl SweepConfig {
    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }
}

pub const DEFAULT_TR_RATIO: f64 = 0.01;

fn number(v: &Value, path: &str) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::config(
            path,
            format!("expected a number, found {}", other.type_str()),
        )),
    }
}

fn string<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::config(path, format!("expected a string, found {}", v.type_str())))
}

fn table<'a>(v: &'a Value, path: &str) -> Result<&'a Table> {
    v.as_table()
        .ok_or_else(|| Error::config(path, format!("expected a table, found {}", v.type_str())))
}

fn reject_unknown(t: &Table, prefix: &str, allowed: &[&str]) -> Result<()> {
    for key in t.keys() {
        if !allowed.contains(&key.as_str()) {
            let path = if prefix.is_empty() {
                key.clone()
            } else {
                format!("{prefix}.{key}")
            };
            return Err(Error::config(path, "unknown key"));
        }
    }
    Ok(())
}

/// `count` points from `min` to `max` inclusive. Log grids are spaced
/// evenly in `ln |x|` and need `min`, `max` nonzero and of the same sign.
pub fn grid(
    spacing: Spacing,
    min: f64,
    max: f64,
    count: usize,
) -> std::result::Result<Vec<f64>, String> {
    if count == 0 {
        return Err("count must be >= 1".into());
    }
    if !(min.is_finite() && max.is_finite()) {
        return Err("min and max must be finite".into());
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let last = (count - 1) as f64;
    let mut out: Vec<f64> = match spacing {
        Spacing::Linear => (0..count)
            .map(|j| min + (max - min) * (j as f64 / last))
            .collect(),
        Spacing::Log => {
            if min == 0.0 || max == 0.0 || min.signum() != max.signum() {
                return Err("log spacing needs min and max nonzero with the same sign".into());
            }
            let sign = min.signum();
            let (a, b) = (min.abs().ln(), max.abs().ln());
            (0..count)
                .map(|j| sign * (a + (b - a) * (j as f64 / last)).exp())
                .collect()
        }
    };
    out[0] = min;
    out[count - 1] = max;
    Ok(out)
}

fn parse_axis(param: ParamName, v: &Value, path: &str) -> Result<Axis> {
    let t = table(v, path)?;
    let mut values = if let Some(list) = t.get("values") {
        reject_unknown(t, path, &["values"])?;
        let arr = list.as_array().ok_or_else(|| {
            Error::config(
                format!("{path}.values"),
                format!("expected an array, found {}", list.type_str()),
            )
        })?;
        arr.iter()
            .enumerate()
            .map(|(k, x)| number(x, &format!("{path}.values[{k}]")))
            .collect::<Result<Vec<_>>>()?
    } else {
        reject_unknown(t, path, &["spacing", "min", "max", "count"])?;
        let get = |key: &str| {
            t.get(key)
                .ok_or_else(|| Error::config(format!("{path}.{key}"), "missing required key"))
        };
        let spacing = match string(get("spacing")?, &format!("{path}.spacing"))? {
            "linear" => Spacing::Linear,
            "log" => Spacing::Log,
            other => {
                return Err(Error::config(
                    format!("{path}.spacing"),
                    format!("expected linear or log, got `{other}`"),
                ))
            }
        };
        let min = number(get("min")?, &format!("{path}.min"))?;
        let max = number(get("max")?, &format!("{path}.max"))?;
        let count = number(get("count")?, &format!("{path}.count"))?;
        if count < 1.0 || count.fract() != 0.0 {
            return Err(Error::config(
                format!("{path}.count"),
                format!("must be a positive integer, got {count}"),
            ));
        }
        grid(spacing, min, max, count as usize).map_err(|e| Error::config(path, e))?
    };
    if values.is_empty() {
        return Err(Error::config(path, "grid is empty"));
    }
    if param == ParamName::Cycles {
        for x in &mut values {
            *x = x.round();
        }
    }
    Ok(Axis { param, values })
}

pub fn parse_config(text: &str) -> Result<SweepConfig> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
    reject_unknown(&doc, "", &["margin", "mode", "fixed", "axes", "outputs"])?;

    let margin = match doc.get("margin") {
        Some(v) => number(v, "margin")?,
        None => DEFAULT_MARGIN,
    };
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::config(
            "margin",
            format!("must lie in (0, 1), got {margin}"),
        ));
    }

    let mode = match doc.get("mode") {
        None => EngineMode::default(),
        Some(v) => {
            let t = table(v, "mode")?;
            reject_unknown(t, "mode", &["evolution", "reset"])?;
            let evo = match t.get("evolution") {
                Some(v) => string(v, "mode.evolution")?,
                None => "exact",
            };
            let reset = match t.get("reset") {
                Some(v) => string(v, "mode.reset")?,
                None => "percycle",
            };
            let evolution = crate::strategy::propagator(evo)
                .map_err(|e| Error::config("mode.evolution", e.to_string()))?;
            let reset = crate::strategy::reset_policy(reset)
                .map_err(|e| Error::config("mode.reset", e.to_string()))?;
            EngineMode { evolution, reset }
        }
    };

    let mut seen: [Option<String>; 7] = Default::default();
    let mut claim = |param: ParamName, path: String| -> Result<()> {
        let slot = &mut seen[param.index()];
        if let Some(prev) = slot {
            return Err(Error::config(
                path,
                format!("duplicate parameter `{param}` (already set at `{prev}`)"),
            ));
        }
        *slot = Some(path);
        Ok(())
    };

    let mut fixed = Vec::new();
    if let Some(v) = doc.get("fixed") {
        for (key, val) in table(v, "fixed")? {
            let path = format!("fixed.{key}");
            let param =
                ParamName::from_key(key).ok_or_else(|| Error::config(&path, "unknown key"))?;
            let x = number(val, &path)?;
            claim(param, path)?;
            fixed.push((param, x));
        }
    }

    let mut axes = Vec::new();
    if let Some(v) = doc.get("axes") {
        for (key, val) in table(v, "axes")? {
            let path = format!("axes.{key}");
            let param =
                ParamName::from_key(key).ok_or_else(|| Error::config(&path, "unknown key"))?;
            claim(param, path.clone())?;
            axes.push(parse_axis(param, val, &path)?);
        }
    }

    if seen[ParamName::OffOnRatio.index()].is_none() {
        fixed.push((ParamName::OffOnRatio, DEFAULT_TR_RATIO));
        seen[ParamName::OffOnRatio.index()] = Some("<default>".into());
    }
    for param in ParamName::ALL {
        if seen[param.index()].is_none() {
            return Err(Error::config(
                format!("fixed.{param}"),
                "missing required key (set it under [fixed] or as an axis)",
            ));
        }
    }
    fixed.sort_by_key(|(p, _)| *p);

    let mut outputs = Outputs::default();
    if let Some(v) = doc.get("outputs") {
        let t = table(v, "outputs")?;
        reject_unknown(t, "outputs", &["format", "samples", "parallel"])?;
        if let Some(v) = t.get("format") {
            outputs.format = string(v, "outputs.format")?.parse()?;
        }
        if let Some(v) = t.get("samples") {
            let k = number(v, "outputs.samples")?;
            if k < 1.0 || k.fract() != 0.0 {
                return Err(Error::config(
                    "outputs.samples",
                    format!("must be a positive integer, got {k}"),
                ));
            }
            outputs.samples = k as usize;
        }
        if let Some(v) = t.get("parallel") {
            outputs.parallel = v.as_bool().ok_or_else(|| {
                Error::config(
                    "outputs.parallel",
                    format!("expected a boolean, found {}", v.type_str()),
                )
            })?;
        }
    }

    Ok(SweepConfig {
        axes,
        fixed,
        mode,
        margin,
        outputs,
    })
}

//! One pipeline run per grid point of a single parameter.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, SamplingSpec};
use super::run::run_pipeline;
use crate::certify::{GuaranteeMode, Verdict};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    /// Filter threshold.
    Delta,
    /// Total sample count.
    Samples,
    /// Confidence parameter, probabilistic mode only.
    Beta,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Delta => "delta",
            SweepParameter::Samples => "samples",
            SweepParameter::Beta => "beta",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "delta" | "δ" => Ok(SweepParameter::Delta),
            "samples" | "s" => Ok(SweepParameter::Samples),
            "beta" | "β" => Ok(SweepParameter::Beta),
            other => Err(Error::Config(format!(
                "unknown sweep parameter {other:?}; use delta, samples or beta"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: SweepParameter,
    pub value: f64,
    pub samples: usize,
    pub retained: usize,
    pub retention: f64,
    pub eta: Option<f64>,
    pub condition: Option<f64>,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
}

/// Marker written in the `error` column when too few samples survive.
pub const INSUFFICIENT_SAMPLES: &str = "insufficient-samples";

/// `config` with `parameter` set to `value`.
pub fn configure(config: &RunConfig, parameter: SweepParameter, value: f64) -> Result<RunConfig> {
    let mut cfg = config.clone();
    match parameter {
        SweepParameter::Delta => {
            // Hold the data fixed while the threshold moves.
            cfg.truth
                .amplitude
                .get_or_insert(config.delta * std::f64::consts::SQRT_2);
            cfg.delta = value;
        }
        SweepParameter::Beta => {
            if cfg.mode != GuaranteeMode::Probabilistic {
                return Err(Error::Config("beta sweeps need probabilistic mode".into()));
            }
            cfg.beta = Some(value);
        }
        SweepParameter::Samples => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::Config(format!(
                    "sample count must be a positive integer, got {value}"
                )));
            }
            let total = value as usize;
            cfg.sampling = match &cfg.sampling {
                SamplingSpec::IidUniform { .. } => SamplingSpec::IidUniform { count: total },
                SamplingSpec::UniformGrid { counts_per_axis } => {
                    let n = counts_per_axis.len() as f64;
                    let per_axis = (value.powf(1.0 / n).round() as usize).max(1);
                    SamplingSpec::UniformGrid {
                        counts_per_axis: vec![per_axis; counts_per_axis.len()],
                    }
                }
            };
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn root(e: &Error) -> &Error {
    match e {
        Error::Stage { source, .. } => root(source),
        other => other,
    }
}

fn run_point(config: &RunConfig, parameter: SweepParameter, value: f64) -> SweepRow {
    let mut row = SweepRow {
        parameter,
        value,
        samples: 0,
        retained: 0,
        retention: 0.0,
        eta: None,
        condition: None,
        verdict: None,
        error: None,
    };
    let cfg = match configure(config, parameter, value) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.samples = cfg.sampling.total();
    match run_pipeline(&cfg) {
        Ok(outcome) => {
            let r = outcome.report;
            row.samples = r.samples;
            row.retained = r.retained;
            row.retention = r.retained as f64 / r.samples as f64;
            row.eta = Some(r.solve.eta);
            row.condition = Some(r.certification.condition_value);
            row.verdict = Some(r.certification.verdict);
        }
        Err(e) => {
            if let Error::InsufficientSamples { retained, .. } = root(&e) {
                row.retained = *retained;
                row.retention = *retained as f64 / row.samples.max(1) as f64;
                row.error = Some(format!("{INSUFFICIENT_SAMPLES}: {e}"));
            } else {
                row.error = Some(e.to_string());
            }
        }
    }
    row
}

/// Runs every grid point in parallel; failures become rows.
pub fn sweep(config: &RunConfig, parameter: SweepParameter, values: &[f64]) -> Vec<SweepRow> {
    values.par_iter().map(|&v| run_point(config, parameter, v)).collect()
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "parameter",
        "value",
        "samples",
        "retained",
        "retention",
        "eta",
        "condition",
        "verdict",
        "error",
    ])?;
    let o = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in rows {
        w.write_record([
            r.parameter.name().to_string(),
            r.value.to_string(),
            r.samples.to_string(),
            r.retained.to_string(),
            r.retention.to_string(),
            o(r.eta),
            o(r.condition),
            r.verdict.map_or(String::new(), |v| format!("{v:?}").to_lowercase()),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `0.001,0.002` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse sweep values {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(bad());
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        let step = (stop - start) / (count - 1) as f64;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()
        .and_then(|v| if v.is_empty() { Err(bad()) } else { Ok(v) })
}

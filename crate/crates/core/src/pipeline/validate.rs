//! Checks a stored certificate against the ground-truth system.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::run::{cover, EXIT_FAIL, EXIT_PASS};
use crate::barrier::{check_certificate, BarrierCertificate, ResidualReport};
use crate::error::{Error, Result, StageExt};
use crate::models::{check_safety_empirically, SafetyReport};
use crate::sampling::{grid_states, SamplePair};

/// Grid points per unit length for the dense residual check.
pub const DENSE_DENSITY: f64 = 20_000.0;
/// Upper bound on grid points per axis in 2-D and up.
pub const MAX_POINTS_PER_AXIS: usize = 1_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub certificate: BarrierCertificate,
    pub grid_points: usize,
    /// Residuals of the certificate conditions on the dense grids; the
    /// conditions hold when every residual is `<= 0`.
    pub residuals: ResidualReport,
    pub conditions_hold: bool,
    pub safety: SafetyReport,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.conditions_hold && self.safety.is_safe()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

pub fn validate(config: &RunConfig, certificate: &BarrierCertificate) -> Result<ValidationReport> {
    config.validate().stage("config")?;
    let system = config.resolve().stage("config")?;
    let n = system.state_set.dim();
    if certificate.template.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: certificate.template.dim(),
        })
        .stage("validate");
    }
    let counts: Vec<usize> = system
        .state_set
        .widths()
        .iter()
        .map(|w| {
            let c = (w * DENSE_DENSITY).ceil() as usize + 1;
            if n == 1 {
                c
            } else {
                c.min(MAX_POINTS_PER_AXIS)
            }
        })
        .collect();
    let density: Vec<f64> = counts
        .iter()
        .zip(system.state_set.widths())
        .map(|(c, w)| (*c as f64 - 1.0) / w)
        .collect();
    let states = grid_states(&system.state_set, &counts).stage("validate")?;
    let pairs = states
        .into_iter()
        .map(|x| {
            let y = system.truth.step(&x)?;
            Ok(SamplePair { state: x, successor: y })
        })
        .collect::<Result<Vec<_>>>()
        .stage("validate")?;
    let initial = cover(&system.initial_set, &density).stage("validate")?;
    let unsafe_ = cover(&system.unsafe_set, &density).stage("validate")?;
    let residuals = check_certificate(certificate, 0.0, &pairs, &initial, &unsafe_);
    let conditions_hold = residuals.passes_at(0.0);
    let safety = check_safety_empirically(
        &system.truth,
        &system.initial_set,
        &system.unsafe_set,
        config.safety.trajectories,
        config.safety.horizon,
        config.seed.wrapping_add(2),
    )
    .stage("validate")?;
    Ok(ValidationReport {
        certificate: certificate.clone(),
        grid_points: pairs.len() + initial.len() + unsafe_.len(),
        residuals,
        conditions_hold,
        safety,
    })
}

pub fn validate_files(config: &Path, certificate: &Path) -> Result<ValidationReport> {
    let cfg = RunConfig::load(config).stage("config")?;
    let cert = BarrierCertificate::load(certificate).stage("validate")?;
    validate(&cfg, &cert)
}

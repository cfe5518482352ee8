//! Discrete-time systems `x(k+1) = f(x(k))`, box-shaped regions, and
//! trajectory simulation.
//!
//! A [`SystemModel`] plays two roles. Without a perturbation it is the
//! first-principles physics model used by the sample filter. With a
//! [`PerturbationField`] attached it is the ground-truth system that
//! produces the measured successors.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned hyperrectangle `lower <= x <= upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl RegionBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidInput("region must have dimension >= 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidInput(format!(
                    "region axis {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn contains_box(&self, other: &RegionBox) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| self.lower[i] <= other.lower[i] && other.upper[i] <= self.upper[i])
    }

    /// Uniform draw from the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
            .collect()
    }
}

/// Bounded ripple `w(x) = A sin(2 pi nu x + phase)` applied componentwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationField {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl PerturbationField {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "perturbation amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "perturbation frequency must be finite and > 0, got {frequency}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidInput("perturbation phase must be finite".into()));
        }
        Ok(Self {
            amplitude,
            frequency,
            phase,
        })
    }

    /// Field with exactly `cycles` periods over `[lower, lower + width]`,
    /// starting at a zero crossing.
    pub fn with_cycles(amplitude: f64, cycles: f64, lower: f64, width: f64) -> Result<Self> {
        let frequency = cycles / width;
        let phase = (-2.0 * PI * frequency * lower).rem_euclid(2.0 * PI);
        Self::new(amplitude, frequency, phase)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * x + self.phase).sin()
    }
}

/// Quadratic polynomial map: `f_i(x) = c_i + b_i . x + x^T Q_i x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticMap {
    pub constant: Vec<f64>,
    pub linear: Vec<Vec<f64>>,
    pub quadratic: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Dynamics {
    /// `f(x) = M x + b`.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    QuadraticPolynomial(QuadraticMap),
}

impl Dynamics {
    fn dim(&self) -> usize {
        match self {
            Dynamics::Affine { offset, .. } => offset.len(),
            Dynamics::QuadraticPolynomial(q) => q.constant.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::InvalidInput("system dimension must be >= 1".into()));
        }
        let square = |m: &[Vec<f64>], what: &str| -> Result<()> {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidInput(format!("{what} must be {n}x{n}")));
            }
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("{what} has non-finite entries")));
            }
            Ok(())
        };
        match self {
            Dynamics::Affine { matrix, offset } => {
                square(matrix, "affine matrix")?;
                if offset.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("affine offset is not finite".into()));
                }
            }
            Dynamics::QuadraticPolynomial(q) => {
                square(&q.linear, "linear part")?;
                if q.quadratic.len() != n {
                    return Err(Error::InvalidInput(format!(
                        "quadratic part needs {n} component matrices"
                    )));
                }
                for m in &q.quadratic {
                    square(m, "quadratic component")?;
                }
                if q.constant.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("constant part is not finite".into()));
                }
            }
        }
        Ok(())
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Dynamics::Affine { matrix, offset } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = offset[i] + dot(&matrix[i], x);
                }
            }
            Dynamics::QuadraticPolynomial(q) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = q.constant[i] + dot(&q.linear[i], x);
                    for (j, row) in q.quadratic[i].iter().enumerate() {
                        acc += x[j] * dot(row, x);
                    }
                    *o = acc;
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Affine,
    QuadraticPolynomial,
    Perturbed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    dynamics: Dynamics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    perturbation: Option<PerturbationField>,
}

impl SystemModel {
    pub fn new(dynamics: Dynamics, perturbation: Option<PerturbationField>) -> Result<Self> {
        dynamics.validate()?;
        Ok(Self { dynamics, perturbation })
    }

    /// Scalar affine map `x -> a x + b`.
    pub fn affine_1d(a: f64, b: f64) -> Result<Self> {
        Self::new(
            Dynamics::Affine {
                matrix: vec![vec![a]],
                offset: vec![b],
            },
            None,
        )
    }

    /// Scalar quadratic map `x -> c0 + c1 x + c2 x^2`.
    pub fn quadratic_1d(c0: f64, c1: f64, c2: f64) -> Result<Self> {
        Self::new(
            Dynamics::QuadraticPolynomial(QuadraticMap {
                constant: vec![c0],
                linear: vec![vec![c1]],
                quadratic: vec![vec![vec![c2]]],
            }),
            None,
        )
    }

    pub fn with_perturbation(mut self, field: PerturbationField) -> Self {
        self.perturbation = Some(field);
        self
    }

    /// The same map with any perturbation removed.
    pub fn physics(&self) -> SystemModel {
        SystemModel {
            dynamics: self.dynamics.clone(),
            perturbation: None,
        }
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn perturbation(&self) -> Option<&PerturbationField> {
        self.perturbation.as_ref()
    }

    pub fn kind(&self) -> ModelKind {
        match (&self.perturbation, &self.dynamics) {
            (Some(_), _) => ModelKind::Perturbed,
            (None, Dynamics::Affine { .. }) => ModelKind::Affine,
            (None, Dynamics::QuadraticPolynomial(_)) => ModelKind::QuadraticPolynomial,
        }
    }

    pub fn dim(&self) -> usize {
        self.dynamics.dim()
    }

    /// One step of the map.
    pub fn step(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.step_into(x, &mut out)?;
        Ok(out)
    }

    pub fn step_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite component {v}")));
        }
        self.dynamics.eval_into(x, out);
        if let Some(w) = &self.perturbation {
            for (o, xi) in out.iter_mut().zip(x) {
                *o += w.value(*xi);
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!("map diverged at {x:?}")));
        }
        Ok(())
    }
}

/// States `x0, f(x0), ..., f^horizon(x0)`.
pub fn simulate(model: &SystemModel, x0: &[f64], horizon: usize) -> Result<Vec<Vec<f64>>> {
    let mut traj = Vec::with_capacity(horizon + 1);
    traj.push(model.step(x0).map(|_| x0.to_vec())?);
    for k in 0..horizon {
        let next = model.step(&traj[k])?;
        traj.push(next);
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trajectory_index: usize,
    pub step: usize,
    pub state: Vec<f64>,
    pub trajectory: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub trajectories: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Number of trajectories that entered the unsafe set.
    pub violations: usize,
    /// Lowest-index offending trajectory, if any.
    pub first_violation: Option<Violation>,
}

impl SafetyReport {
    pub fn is_safe(&self) -> bool {
        self.violations == 0
    }
}

/// Monte-Carlo check that trajectories started in `initial` never visit `unsafe_set`.
pub fn check_safety_empirically(
    model: &SystemModel,
    initial: &RegionBox,
    unsafe_set: &RegionBox,
    trajectories: usize,
    horizon: usize,
    seed: u64,
) -> Result<SafetyReport> {
    if trajectories == 0 || horizon == 0 {
        return Err(Error::InvalidInput(
            "trajectory count and horizon must be positive".into(),
        ));
    }
    for region in [initial, unsafe_set] {
        if region.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: region.dim(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..trajectories).map(|_| initial.sample(&mut rng)).collect();

    let outcomes = starts
        .par_iter()
        .map(|x0| -> Result<Option<usize>> {
            let mut x = x0.clone();
            let mut next = vec![0.0; x.len()];
            if unsafe_set.contains(&x) {
                return Ok(Some(0));
            }
            for k in 1..=horizon {
                model.step_into(&x, &mut next)?;
                std::mem::swap(&mut x, &mut next);
                if unsafe_set.contains(&x) {
                    return Ok(Some(k));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?;

    let violations = outcomes.iter().filter(|o| o.is_some()).count();
    let first_violation = match outcomes.iter().position(Option::is_some) {
        Some(i) => {
            let step = outcomes[i].unwrap_or(0);
            let trajectory = simulate(model, &starts[i], step)?;
            Some(Violation {
                trajectory_index: i,
                step,
                state: trajectory[step].clone(),
                trajectory,
            })
        }
        None => None,
    };
    Ok(SafetyReport {
        trajectories,
        horizon,
        seed,
        violations,
        first_violation,
    })
}

/// Built-in case studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Price adjustment `x + 0.1 (5 - 2x)` on `[0.5, 2.7]`.
    SupplyDemand,
    /// Damped logistic growth `x + 0.5 x (1 - x) - 0.2 x` on `[0.1, 1]`.
    LogisticGrowth,
}

/// Physics model, regions, and ground-truth ripple count of a preset.
#[derive(Clone, Debug)]
pub struct CaseStudy {
    pub physics: SystemModel,
    pub state_set: RegionBox,
    pub initial_set: RegionBox,
    pub unsafe_set: RegionBox,
    /// Ripple periods of the ground-truth perturbation over the state set.
    pub perturbation_cycles: f64,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::SupplyDemand => "supply-demand",
            Preset::LogisticGrowth => "logistic-growth",
        }
    }

    pub fn case_study(self) -> CaseStudy {
        let build = || -> Result<CaseStudy> {
            Ok(match self {
                // x + 0.1(5 - 2x) = 0.8x + 0.5
                Preset::SupplyDemand => CaseStudy {
                    physics: SystemModel::affine_1d(0.8, 0.5)?,
                    state_set: RegionBox::interval(0.5, 2.7)?,
                    initial_set: RegionBox::interval(0.5, 0.6)?,
                    unsafe_set: RegionBox::interval(2.6, 2.7)?,
                    perturbation_cycles: 300.0,
                },
                // x + 0.5x(1 - x) - 0.2x = 1.3x - 0.5x^2
                Preset::LogisticGrowth => CaseStudy {
                    physics: SystemModel::quadratic_1d(0.0, 1.3, -0.5)?,
                    state_set: RegionBox::interval(0.1, 1.0)?,
                    initial_set: RegionBox::interval(0.1, 0.3)?,
                    unsafe_set: RegionBox::interval(0.7, 1.0)?,
                    perturbation_cycles: 150.0,
                },
            })
        };
        build().expect("preset constants are valid")
    }
}

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::barrier::{BarrierTemplate, DEFAULT_KAPPA, DEFAULT_Q_MAX};
use crate::certify::GuaranteeMode;
use crate::error::{Error, Result};
use crate::lipschitz::LipschitzConfig;
use crate::models::{Dynamics, PerturbationField, Preset, RegionBox, SystemModel};
use crate::solver::SolverConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemSpec {
    Preset(Preset),
    Custom(Box<CustomSystem>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomSystem {
    pub dynamics: Dynamics,
    pub state_set: RegionBox,
    pub initial_set: RegionBox,
    pub unsafe_set: RegionBox,
    /// Ripple periods of the ground-truth perturbation across the first axis.
    pub perturbation_cycles: f64,
}

/// Ground-truth perturbation added to the physics model to produce data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruthSpec {
    /// Defaults to `delta * sqrt(2)`.
    pub amplitude: Option<f64>,
    /// Defaults to the system's own cycle count.
    pub cycles: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum SamplingSpec {
    UniformGrid { counts_per_axis: Vec<usize> },
    IidUniform { count: usize },
}

impl SamplingSpec {
    pub fn total(&self) -> usize {
        match self {
            SamplingSpec::UniformGrid { counts_per_axis } => counts_per_axis.iter().product(),
            SamplingSpec::IidUniform { count } => *count,
        }
    }

    /// Sample points per unit length along each axis of `domain`.
    pub fn linear_density(&self, domain: &RegionBox) -> Vec<f64> {
        match self {
            SamplingSpec::UniformGrid { counts_per_axis } => counts_per_axis
                .iter()
                .zip(domain.widths())
                .map(|(c, w)| (*c as f64 - 1.0) / w)
                .collect(),
            SamplingSpec::IidUniform { count } => {
                let per_axis = (*count as f64).powf(1.0 / domain.dim() as f64);
                domain.widths().iter().map(|w| per_axis / w).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetySpec {
    pub trajectories: usize,
    pub horizon: usize,
}

impl Default for SafetySpec {
    fn default() -> Self {
        Self {
            trajectories: 1000,
            horizon: 500,
        }
    }
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

fn default_degree() -> u32 {
    2
}

fn default_q_max() -> Option<f64> {
    Some(DEFAULT_Q_MAX)
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemSpec,
    #[serde(default)]
    pub truth: TruthSpec,
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub seed: u64,
    /// Filter threshold; also sets the default truth amplitude.
    pub delta: f64,
    #[serde(default = "yes")]
    pub filter: bool,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_degree")]
    pub template_degree: u32,
    #[serde(default = "default_q_max")]
    pub q_max: Option<f64>,
    #[serde(default = "yes")]
    pub level_rows: bool,
    pub mode: GuaranteeMode,
    #[serde(default)]
    pub beta: Option<f64>,
    /// Decision-variable count for the scenario bound; defaults to `z + 3`.
    #[serde(default)]
    pub c: Option<usize>,
    #[serde(default)]
    pub lipschitz: LipschitzConfig,
    /// Points per unit length for the initial/unsafe covers; defaults to the
    /// linear density of the state samples.
    #[serde(default)]
    pub cover_density: Option<f64>,
    #[serde(default)]
    pub safety: SafetySpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub write_dataset: bool,
}

/// Models and regions a config resolves to.
#[derive(Clone, Debug)]
pub struct ResolvedSystem {
    pub physics: SystemModel,
    pub truth: SystemModel,
    pub state_set: RegionBox,
    pub initial_set: RegionBox,
    pub unsafe_set: RegionBox,
}

impl RunConfig {
    /// The four built-in experiments per preset.
    pub fn preset(preset: Preset, mode: GuaranteeMode, filter: bool) -> Self {
        let sampling = match (preset, mode) {
            (Preset::SupplyDemand, GuaranteeMode::Deterministic) => SamplingSpec::UniformGrid {
                counts_per_axis: vec![220_000],
            },
            (Preset::SupplyDemand, GuaranteeMode::Probabilistic) => SamplingSpec::IidUniform { count: 300_000 },
            (Preset::LogisticGrowth, GuaranteeMode::Deterministic) => SamplingSpec::UniformGrid {
                counts_per_axis: vec![90_000],
            },
            (Preset::LogisticGrowth, GuaranteeMode::Probabilistic) => SamplingSpec::IidUniform { count: 260_000 },
        };
        let name = format!(
            "{}-{}-{}",
            preset.name(),
            mode.name(),
            if filter { "physics" } else { "traditional" }
        );
        RunConfig {
            name: Some(name),
            system: SystemSpec::Preset(preset),
            truth: TruthSpec::default(),
            sampling,
            seed: 0,
            delta: 0.005,
            filter,
            kappa: DEFAULT_KAPPA,
            template_degree: 2,
            q_max: Some(DEFAULT_Q_MAX),
            level_rows: true,
            mode,
            beta: (mode == GuaranteeMode::Probabilistic).then_some(0.05),
            c: None,
            lipschitz: LipschitzConfig::default(),
            cover_density: None,
            safety: SafetySpec::default(),
            solver: SolverConfig::default(),
            output_dir: None,
            write_dataset: true,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_reader(File::open(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Switches guarantee mode, adding `beta = 0.05` or dropping `beta` as needed.
    pub fn with_mode(mut self, mode: GuaranteeMode) -> Self {
        self.mode = mode;
        match mode {
            GuaranteeMode::Deterministic => self.beta = None,
            GuaranteeMode::Probabilistic => {
                self.beta.get_or_insert(0.05);
            }
        }
        self
    }

    pub fn template(&self, dim: usize) -> Result<BarrierTemplate> {
        BarrierTemplate::full(dim, self.template_degree)
    }

    /// Scenario-bound decision-variable count.
    pub fn decision_count(&self, template: &BarrierTemplate) -> usize {
        self.c.unwrap_or(template.len() + 3)
    }

    pub fn resolve(&self) -> Result<ResolvedSystem> {
        let (physics, state_set, initial_set, unsafe_set, cycles) = match &self.system {
            SystemSpec::Preset(p) => {
                let cs = p.case_study();
                (
                    cs.physics,
                    cs.state_set,
                    cs.initial_set,
                    cs.unsafe_set,
                    cs.perturbation_cycles,
                )
            }
            SystemSpec::Custom(c) => (
                SystemModel::new(c.dynamics.clone(), None)?,
                c.state_set.clone(),
                c.initial_set.clone(),
                c.unsafe_set.clone(),
                c.perturbation_cycles,
            ),
        };
        let amplitude = self.truth.amplitude.unwrap_or(self.delta * std::f64::consts::SQRT_2);
        let cycles = self.truth.cycles.unwrap_or(cycles);
        let truth = if amplitude > 0.0 {
            let w = PerturbationField::with_cycles(amplitude, cycles, state_set.lower()[0], state_set.widths()[0])?;
            physics.clone().with_perturbation(w)
        } else {
            physics.clone()
        };
        Ok(ResolvedSystem {
            physics,
            truth,
            state_set,
            initial_set,
            unsafe_set,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be finite and > 0, got {}", self.delta));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return bad(format!("kappa must lie in (0, 1], got {}", self.kappa));
        }
        if self.template_degree == 0 {
            return bad("template_degree must be >= 1".into());
        }
        if let Some(q) = self.q_max {
            if !(q > 0.0) {
                return bad(format!("q_max must be > 0, got {q}"));
            }
        }
        match self.mode {
            GuaranteeMode::Deterministic if self.beta.is_some() => {
                return bad("beta is only meaningful in probabilistic mode".into())
            }
            GuaranteeMode::Probabilistic => match self.beta {
                None => return bad("probabilistic mode needs beta".into()),
                Some(b) if !(b > 0.0 && b < 1.0) => return bad(format!("beta must lie in (0, 1), got {b}")),
                _ => {}
            },
            _ => {}
        }
        if self.c == Some(0) {
            return bad("c must be >= 1".into());
        }
        if let Some(d) = self.cover_density {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("cover_density must be > 0, got {d}"));
            }
        }
        if self.sampling.total() == 0 {
            return bad("sample count must be >= 1".into());
        }
        let sys = self.resolve().map_err(|e| Error::Config(e.to_string()))?;
        let n = sys.state_set.dim();
        if sys.physics.dim() != n {
            return bad(format!("system has dimension {}, state set {n}", sys.physics.dim()));
        }
        if let SamplingSpec::UniformGrid { counts_per_axis } = &self.sampling {
            if counts_per_axis.len() != n {
                return bad(format!("counts_per_axis needs {n} entries"));
            }
        }
        for (what, r) in [("initial set", &sys.initial_set), ("unsafe set", &sys.unsafe_set)] {
            if !sys.state_set.contains_box(r) {
                return bad(format!(
                    "{what} [{:?}, {:?}] is not contained in the state set [{:?}, {:?}]",
                    r.lower(),
                    r.upper(),
                    sys.state_set.lower(),
                    sys.state_set.upper()
                ));
            }
        }
        if self.mode == GuaranteeMode::Probabilistic && n > 2 {
            return bad("probabilistic mode supports dimensions 1 and 2".into());
        }
        if self.lipschitz.safety_multiplier < 1.0 {
            return bad("lipschitz.safety_multiplier must be >= 1".into());
        }
        Ok(())
    }
}

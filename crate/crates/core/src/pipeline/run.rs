use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ResolvedSystem, RunConfig, SamplingSpec};
use crate::barrier::{assemble, AssembleOptions, BarrierCertificate, Provenance, Regions, RowTag};
use crate::certify::{
    check_deterministic, check_probabilistic, min_violation_level, CertificationReport, GeometryFactor, GuaranteeMode,
};
use crate::error::{Error, Result, StageExt};
use crate::filter::{apply_filter, FilterConfig, FilterOutcome, FilterSummary};
use crate::lipschitz::{self, LipschitzEstimate};
use crate::models::{check_safety_empirically, RegionBox, SafetyReport};
use crate::sampling::{covering_radius, grid_states, sample_grid, sample_iid, save_dataset, Dataset, SamplePair};
use crate::solver::{solve, SolveResult, SolveStatus};

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

/// Upper bound on lattice points per axis for covering radii in 2-D and up.
const MAX_REFERENCE_RESOLUTION: usize = 2_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSummary {
    pub density: Vec<f64>,
    pub initial_points: usize,
    pub unsafe_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHashes {
    pub generated: String,
    pub retained: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stages: Vec<(String, f64)>,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub samples: usize,
    pub retained: usize,
    /// Absent when the filter stage is disabled.
    pub filter: Option<FilterSummary>,
    pub covers: CoverSummary,
    pub rows: usize,
    pub solve: SolveResult,
    pub certificate: BarrierCertificate,
    pub lipschitz: LipschitzEstimate,
    pub certification: CertificationReport,
    pub safety: SafetyReport,
    pub dataset_hashes: DatasetHashes,
    pub warnings: Vec<String>,
    pub timing: Timing,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.certification.passed() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(fs::File::open(path)?)?)
    }

    /// JSON with the timing block zeroed, for byte comparison across runs.
    pub fn to_json_without_timing(&self) -> Result<String> {
        let mut r = self.clone();
        r.timing = Timing::default();
        Ok(serde_json::to_string_pretty(&r)?)
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub system: ResolvedSystem,
    pub dataset: Dataset,
    pub filter: Option<FilterOutcome>,
    pub retained: Dataset,
    pub initial_cover: Vec<Vec<f64>>,
    pub unsafe_cover: Vec<Vec<f64>>,
}

struct Clock {
    start: Instant,
    last: Instant,
    stages: Vec<(String, f64)>,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            stages: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages.push((stage.to_string(), (now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn finish(self) -> Timing {
        Timing {
            total_seconds: self.start.elapsed().as_secs_f64(),
            stages: self.stages,
        }
    }
}

/// One-step dataset drawn from the ground-truth system.
pub fn generate(config: &RunConfig, system: &ResolvedSystem) -> Result<Dataset> {
    match &config.sampling {
        SamplingSpec::UniformGrid { counts_per_axis } => sample_grid(&system.truth, &system.state_set, counts_per_axis),
        SamplingSpec::IidUniform { count } => sample_iid(&system.truth, &system.state_set, *count, config.seed),
    }
}

/// Filtered dataset (or the input unchanged when filtering is off).
pub fn select(
    config: &RunConfig,
    system: &ResolvedSystem,
    dataset: &Dataset,
) -> Result<(Dataset, Option<FilterOutcome>)> {
    if !config.filter {
        return Ok((dataset.clone(), None));
    }
    let out = apply_filter(dataset, &system.physics, &FilterConfig::new(config.delta)?)?;
    Ok((out.retained.clone(), Some(out)))
}

/// Uniform lattice over `region` at `density` points per unit length.
pub fn cover(region: &RegionBox, density: &[f64]) -> Result<Vec<Vec<f64>>> {
    let counts: Vec<usize> = region
        .widths()
        .iter()
        .zip(density)
        .map(|(w, d)| ((w * d).ceil() as usize + 1).max(2))
        .collect();
    grid_states(region, &counts)
}

pub fn cover_density(config: &RunConfig, state_set: &RegionBox) -> Vec<f64> {
    match config.cover_density {
        Some(d) => vec![d; state_set.dim()],
        None => config.sampling.linear_density(state_set),
    }
}

pub fn run_pipeline(config: &RunConfig) -> Result<RunOutcome> {
    config.validate().stage("config")?;
    let mut clock = Clock::new();
    let system = config.resolve().stage("config")?;
    let template = config.template(system.state_set.dim()).stage("config")?;
    let c = config.decision_count(&template);

    let dataset = generate(config, &system).stage("generate")?;
    clock.lap("generate");

    let (retained, filter) = select(config, &system, &dataset).stage("filter")?;
    let minimum = match config.mode {
        GuaranteeMode::Deterministic => 1,
        GuaranteeMode::Probabilistic => c,
    };
    if retained.len() <= minimum {
        return Err(Error::InsufficientSamples {
            retained: retained.len(),
            decision_vars: c,
        })
        .stage("filter");
    }
    clock.lap("filter");

    let density = cover_density(config, &system.state_set);
    let initial_cover = cover(&system.initial_set, &density).stage("assemble")?;
    let unsafe_cover = cover(&system.unsafe_set, &density).stage("assemble")?;
    let regions = Regions {
        state_set: &system.state_set,
        initial_set: &system.initial_set,
        unsafe_set: &system.unsafe_set,
    };
    let options = AssembleOptions {
        q_max: config.q_max,
        level_rows: config.level_rows,
    };
    let constraints = assemble(
        &template,
        config.kappa,
        &retained.pairs,
        &initial_cover,
        &unsafe_cover,
        &regions,
        &options,
    )
    .stage("assemble")?;
    clock.lap("assemble");

    let solution = solve(&constraints, &config.solver).stage("solve")?;
    match solution.status {
        SolveStatus::Optimal => {}
        SolveStatus::Unbounded if config.q_max.is_none() => {
            return Err(Error::Solver("unbounded: coefficient box is disabled".into())).stage("solve")
        }
        other => {
            return Err(Error::Solver(format!("internal: solver ended with status {other:?}"))).stage("solve");
        }
    }
    clock.lap("solve");

    let retained_hash = retained.content_hash();
    let certificate = BarrierCertificate::from_decision(template, config.kappa, &solution.decision)
        .stage("certificate")?
        .with_provenance(Provenance {
            dataset_hash: retained_hash.clone(),
            delta: config.filter.then_some(config.delta),
            mode: config.mode,
        });

    let mut lip_cfg = config.lipschitz.clone();
    lip_cfg.seed = lip_cfg.seed.wrapping_add(config.seed);
    let lipschitz = lipschitz::estimate(&certificate, &retained.pairs, &lip_cfg).stage("lipschitz")?;
    clock.lap("lipschitz");

    let certification = match config.mode {
        GuaranteeMode::Deterministic => {
            let eps = eps_max(&retained.pairs, &system, &initial_cover, &unsafe_cover, &density).stage("certify")?;
            check_deterministic(solution.eta, lipschitz.l, eps).stage("certify")?
        }
        GuaranteeMode::Probabilistic => {
            let beta = config.beta.unwrap_or(0.05);
            let phi = min_violation_level(beta, c, retained.len()).stage("certify")?;
            let geometry = GeometryFactor::from_extents(&system.state_set.widths()).stage("certify")?;
            let mut r = check_probabilistic(solution.eta, lipschitz.l, phi, &geometry, beta).stage("certify")?;
            r.c = Some(c);
            r.retained = Some(retained.len());
            r
        }
    };
    clock.lap("certify");

    let safety = check_safety_empirically(
        &system.truth,
        &system.initial_set,
        &system.unsafe_set,
        config.safety.trajectories,
        config.safety.horizon,
        config.seed.wrapping_add(2),
    )
    .stage("validate")?;
    clock.lap("validate");

    let report = RunReport {
        config: config.clone(),
        samples: dataset.len(),
        retained: retained.len(),
        filter: filter.as_ref().map(|f| f.summary(&dataset)),
        covers: CoverSummary {
            density,
            initial_points: initial_cover.len(),
            unsafe_points: unsafe_cover.len(),
        },
        rows: constraints.len() - constraints.count(RowTag::Level),
        solve: solution,
        certificate,
        lipschitz,
        certification,
        safety,
        dataset_hashes: DatasetHashes {
            generated: dataset.content_hash(),
            retained: retained_hash,
        },
        warnings: constraints.warnings.clone(),
        timing: clock.finish(),
    };
    Ok(RunOutcome {
        report,
        system,
        dataset,
        filter,
        retained,
        initial_cover,
        unsafe_cover,
    })
}

/// Largest covering radius over the flow samples in X and the two region covers.
fn eps_max(
    pairs: &[SamplePair],
    system: &ResolvedSystem,
    initial_cover: &[Vec<f64>],
    unsafe_cover: &[Vec<f64>],
    density: &[f64],
) -> Result<f64> {
    let resolution = density
        .iter()
        .zip(system.state_set.widths())
        .map(|(d, w)| (10.0 * d * w).ceil() as usize)
        .max()
        .unwrap_or(2)
        .clamp(2, MAX_REFERENCE_RESOLUTION);
    let states: Vec<Vec<f64>> = pairs.iter().map(|p| p.state.clone()).collect();
    let flow = covering_radius(&states, &system.state_set, resolution)?;
    let init = covering_radius(initial_cover, &system.initial_set, resolution)?;
    let uns = covering_radius(unsafe_cover, &system.unsafe_set, resolution)?;
    Ok(flow.max(init).max(uns))
}

/// Writes `report.json`, `certificate.json` and, if enabled, the retained dataset.
pub fn write_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let report = dir.join("report.json");
    fs::write(&report, serde_json::to_string_pretty(&outcome.report)? + "\n")?;
    written.push(report);
    let cert = dir.join("certificate.json");
    outcome.report.certificate.save(&cert)?;
    written.push(cert);
    if outcome.report.config.write_dataset {
        let data = dir.join("dataset.csv");
        save_dataset(&outcome.dataset, &data)?;
        written.push(data);
        if outcome.filter.is_some() {
            let kept = dir.join("retained.csv");
            save_dataset(&outcome.retained, &kept)?;
            written.push(kept);
        }
    }
    Ok(written)
}

/// Runs the pipeline and writes artifacts into `out`; returns the report and exit code.
pub fn cmd_run(config: &RunConfig, out: &Path) -> Result<(RunReport, i32)> {
    let outcome = run_pipeline(config)?;
    write_artifacts(&outcome, out)?;
    let code = outcome.report.exit_code();
    Ok((outcome.report, code))
}

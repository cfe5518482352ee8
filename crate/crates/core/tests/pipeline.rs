use std::fs;
use std::process::Command;

use scenario_barrier::barrier::BarrierCertificate;
use scenario_barrier::certify::GuaranteeMode;
use scenario_barrier::models::{Preset, RegionBox};
use scenario_barrier::pipeline::{
    cmd_run, plotdata, run_pipeline, validate, CustomSystem, RunConfig, RunReport, SamplingSpec, SystemSpec, EXIT_FAIL,
    EXIT_PASS,
};
use scenario_barrier::sampling::load_dataset;
use scenario_barrier::solver::{solve_minmax_direct, SolverConfig};
use scenario_barrier::Error;

fn small(preset: Preset, mode: GuaranteeMode, filter: bool) -> RunConfig {
    let mut cfg = RunConfig::preset(preset, mode, filter);
    cfg.sampling = match mode {
        GuaranteeMode::Deterministic => SamplingSpec::UniformGrid {
            counts_per_axis: vec![30_000],
        },
        GuaranteeMode::Probabilistic => SamplingSpec::IidUniform { count: 30_000 },
    };
    cfg.safety.trajectories = 200;
    cfg
}

#[test]
fn identical_configs_give_identical_reports() {
    let cfg = small(Preset::LogisticGrowth, GuaranteeMode::Probabilistic, true);
    let a = run_pipeline(&cfg).unwrap().report;
    let b = run_pipeline(&cfg).unwrap().report;
    assert_eq!(a.to_json_without_timing().unwrap(), b.to_json_without_timing().unwrap());
    let mut other = cfg.clone();
    other.seed = 1;
    let c = run_pipeline(&other).unwrap().report;
    assert_ne!(a.dataset_hashes.generated, c.dataset_hashes.generated);
}

#[test]
fn stored_verdict_matches_recomputation() {
    for mode in [GuaranteeMode::Deterministic, GuaranteeMode::Probabilistic] {
        let r = run_pipeline(&small(Preset::SupplyDemand, mode, true)).unwrap().report;
        let again = r.certification.recheck().unwrap();
        assert_eq!(again, r.certification);
    }
}

#[test]
fn artifacts_round_trip_and_exit_codes_follow_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(Preset::SupplyDemand, GuaranteeMode::Deterministic, true);
    let (report, code) = cmd_run(&cfg, dir.path()).unwrap();
    assert_eq!(
        code,
        if report.certification.passed() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    );

    let loaded = RunReport::load(&dir.path().join("report.json")).unwrap();
    assert_eq!(loaded, report);
    let cert = BarrierCertificate::load(&dir.path().join("certificate.json")).unwrap();
    assert_eq!(cert, report.certificate);
    assert_eq!(
        cert.provenance.as_ref().unwrap().dataset_hash,
        report.dataset_hashes.retained
    );
    let data = load_dataset(&dir.path().join("dataset.csv")).unwrap();
    assert_eq!(data.content_hash(), report.dataset_hashes.generated);
    let kept = load_dataset(&dir.path().join("retained.csv")).unwrap();
    assert_eq!(kept.len(), report.retained);
}

#[test]
fn failing_verdict_is_never_exit_zero() {
    // Logistic growth on a coarse grid: the deterministic margin is too small.
    let mut cfg = small(Preset::LogisticGrowth, GuaranteeMode::Deterministic, true);
    cfg.write_dataset = false;
    let dir = tempfile::tempdir().unwrap();
    let (report, code) = cmd_run(&cfg, dir.path()).unwrap();
    assert!(!report.certification.passed());
    assert_eq!(code, EXIT_FAIL);
}

#[test]
fn unsafe_set_outside_state_set_fails_before_any_work() {
    let mut cfg = small(Preset::SupplyDemand, GuaranteeMode::Deterministic, true);
    let cs = Preset::SupplyDemand.case_study();
    cfg.system = SystemSpec::Custom(Box::new(CustomSystem {
        dynamics: cs.physics.dynamics().clone(),
        state_set: cs.state_set,
        initial_set: cs.initial_set,
        unsafe_set: RegionBox::interval(2.6, 3.0).unwrap(),
        perturbation_cycles: 300.0,
    }));
    let err = run_pipeline(&cfg).unwrap_err();
    match err {
        Error::Stage { stage, source } => {
            assert_eq!(stage, "config");
            assert!(matches!(*source, Error::Config(_)));
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn too_few_retained_samples_name_the_filter_stage() {
    let mut cfg = small(Preset::LogisticGrowth, GuaranteeMode::Probabilistic, true);
    cfg.truth.amplitude = Some(0.01);
    cfg.delta = 1e-30;
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(err.to_string().contains("filter"), "{err}");
}

#[test]
fn traditional_run_has_no_jump_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Preset::SupplyDemand, GuaranteeMode::Deterministic, false);
    cfg.write_dataset = false;
    cmd_run(&cfg, dir.path()).unwrap();
    let out = dir.path().join("plot");
    let written = plotdata(&dir.path().join("report.json"), &out).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["barrier.csv", "levels.csv", "samples.csv", "regions.csv"]);
}

#[test]
fn plot_tables_agree_with_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Preset::SupplyDemand, GuaranteeMode::Deterministic, true);
    cfg.write_dataset = false;
    let (report, _) = cmd_run(&cfg, dir.path()).unwrap();
    let out = dir.path().join("plot");
    plotdata(&dir.path().join("report.json"), &out).unwrap();
    assert!(out.join("jump.csv").is_file());

    let levels = fs::read_to_string(out.join("levels.csv")).unwrap();
    let values: Vec<f64> = levels
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values, [report.certificate.alpha, report.certificate.rho]);

    // B <= alpha over the initial set and B >= rho over the unsafe set.
    let cs = Preset::SupplyDemand.case_study();
    let mut rdr = csv::Reader::from_path(out.join("barrier.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let x: f64 = rec[0].parse().unwrap();
        let b: f64 = rec[1].parse().unwrap();
        if cs.initial_set.contains(&[x]) {
            assert!(b <= report.certificate.alpha + 1e-9, "B({x}) = {b}");
        }
        if cs.unsafe_set.contains(&[x]) {
            assert!(b >= report.certificate.rho - 1e-9, "B({x}) = {b}");
        }
    }

    let mut rdr = csv::Reader::from_path(out.join("samples.csv")).unwrap();
    let kept = rdr.records().filter(|r| &r.as_ref().unwrap()[3] == "1").count();
    assert_eq!(kept, report.retained);
}

#[test]
fn missing_report_is_a_file_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = plotdata(&dir.path().join("absent.json"), dir.path()).unwrap_err();
    assert!(matches!(err, Error::Io(_)), "{err}");
}

#[test]
fn validation_confirms_a_passing_certificate() {
    let cfg = RunConfig::preset(Preset::SupplyDemand, GuaranteeMode::Deterministic, true);
    let r = run_pipeline(&cfg).unwrap().report;
    assert!(r.certification.passed());
    let v = validate(&cfg, &r.certificate).unwrap();
    assert!(v.conditions_hold, "{:?}", v.residuals);
    assert!(v.passed());
}

#[test]
fn logistic_deterministic_simplex_agrees_with_interior_method() {
    let cfg = RunConfig::preset(Preset::LogisticGrowth, GuaranteeMode::Deterministic, true);
    let outcome = run_pipeline(&cfg).unwrap();
    let sys = scenario_barrier::barrier::assemble(
        &cfg.template(1).unwrap(),
        cfg.kappa,
        &outcome.retained.pairs,
        &outcome.initial_cover,
        &outcome.unsafe_cover,
        &scenario_barrier::barrier::Regions {
            state_set: &outcome.system.state_set,
            initial_set: &outcome.system.initial_set,
            unsafe_set: &outcome.system.unsafe_set,
        },
        &Default::default(),
    )
    .unwrap();
    let direct = solve_minmax_direct(&sys, &SolverConfig::default()).unwrap();
    assert!(
        (direct.eta - outcome.report.solve.eta).abs() < 1e-4,
        "{} vs {}",
        direct.eta,
        outcome.report.solve.eta
    );
}

#[test]
fn cli_run_and_validate() {
    let bin = env!("CARGO_BIN_EXE_scenario-barrier");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("config.json");
    let mut cfg = small(Preset::SupplyDemand, GuaranteeMode::Deterministic, true);
    cfg.write_dataset = false;
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("out");

    let status = Command::new(bin)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "3", "--jobs", "1"])
        .output()
        .unwrap();
    let report = RunReport::load(&out.join("report.json")).unwrap();
    assert_eq!(report.config.seed, 3);
    assert_eq!(status.status.code(), Some(report.exit_code()));

    let status = Command::new(bin)
        .args(["validate", "--config"])
        .arg(&cfg_path)
        .arg("--certificate")
        .arg(out.join("certificate.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        out.join("validation.json").is_file(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );

    let status = Command::new(bin)
        .args(["run", "--config"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));

    let status = Command::new(bin)
        .args(["run", "--no-filter", "--mode", "probabilistic", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("prob"))
        .output()
        .unwrap();
    let report = RunReport::load(&dir.path().join("prob/report.json")).unwrap();
    assert!(!report.config.filter);
    assert_eq!(report.config.mode, GuaranteeMode::Probabilistic);
    assert!(status.status.code().is_some());
}

#[test]
fn shipped_configs_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        let name = path.file_stem().unwrap().to_string_lossy();
        assert_eq!(cfg.name.as_deref(), Some(name.as_ref()));
        count += 1;
    }
    assert_eq!(count, 8);
}

//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;
use scenario_barrier::certify::{
    beta_inc, beta_inc_inv, check_deterministic, check_probabilistic, min_violation_level, GeometryFactor,
    GuaranteeMode, Verdict,
};
use scenario_barrier::filter::{apply_filter, FilterConfig};
use scenario_barrier::models::{PerturbationField, Preset};
use scenario_barrier::pipeline::{run_pipeline, RunConfig, RunReport};
use scenario_barrier::sampling::{covering_radius_1d, sample_iid};
use scenario_barrier::solver::{solve, solve_minmax_direct, SolverConfig};

const CONDITION_TOL: f64 = 5e-4;
const C1_RUNTIME_S: f64 = 1.0;
const RETENTION: (f64, f64) = (0.49, 0.51);
const ETA_CEILING: f64 = -0.02;
const C2_RUNTIME_S: f64 = 60.0;
const PHI_TARGET: f64 = 8.08e-5;
const PHI_TOL: f64 = 2e-7;
const ROUND_TRIP_TOL: f64 = 1e-10;
const CLOSED_FORM_TOL: f64 = 1e-12;
const VERTEX_TOL: f64 = 1e-6;
const MINMAX_TOL: f64 = 1e-4;
const MONOTONE_SLACK: f64 = 1e-9;
const MU_TOL: f64 = 5e-3;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

// Printed table: (eta, L, eps_max) and (eta, L, phi, a) with the printed condition.
const DETERMINISTIC_ROWS: [(f64, f64, f64, f64); 4] = [
    (-0.0235, 67.90, 5e-6, -0.0231),
    (-0.0527, 103.72, 9e-5, -0.0434),
    (-0.0065, 25.25, 5e-6, -0.0064),
    (-0.0694, 222.87, 8e-5, -0.0515),
];
const PROBABILISTIC_ROWS: [(f64, f64, f64, f64, f64); 4] = [
    (-0.2078, 11.51, 3.1e-5, 2.2, -0.2070),
    (-0.2094, 11.51, 6.18e-5, 2.2, -0.2078),
    (-6.4189e-4, 2.9479, 4.05e-5, 0.9, -5.3444e-4),
    (-0.0021, 5.0397, 8.08e-5, 0.9, -0.0017),
];

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (eta, l, eps, printed) in DETERMINISTIC_ROWS {
        let r = check_deterministic(eta, l, eps).unwrap();
        worst = worst.max((r.condition_value - printed).abs());
    }
    for (eta, l, phi, a, printed) in PROBABILISTIC_ROWS {
        let g = GeometryFactor::interval(a).unwrap();
        let r = check_probabilistic(eta, l, phi, &g, 0.05).unwrap();
        worst = worst.max((r.condition_value - printed).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= CONDITION_TOL && secs < C1_RUNTIME_S,
        format!("max |condition - printed| = {worst:.2e} (tol {CONDITION_TOL:.0e}), {secs:.3}s"),
    )
}

fn criterion_2(report: &RunReport, secs: f64) -> Outcome {
    let retention = report.filter.as_ref().map_or(f64::NAN, |f| f.retention);
    let c = &report.certification;
    let ok = (RETENTION.0..=RETENTION.1).contains(&retention)
        && c.eta <= ETA_CEILING
        && c.condition_value <= 0.0
        && c.verdict == Verdict::Pass
        && secs < C2_RUNTIME_S;
    outcome(
        ok,
        format!(
            "retention {retention:.4}, eta {:.4}, condition {:.4}, {:?}, {secs:.1}s",
            c.eta, c.condition_value, c.verdict
        ),
    )
}

fn criterion_3(report: &RunReport) -> Outcome {
    let c = &report.certification;
    let phi = c.phi.unwrap_or(f64::NAN);
    let ok = (phi - PHI_TARGET).abs() <= PHI_TOL
        && c.c == Some(6)
        && c.verdict == Verdict::Pass
        && (c.confidence - 0.95).abs() < 1e-12;
    outcome(
        ok,
        format!(
            "P {}, phi {phi:.5e} (target {PHI_TARGET:.2e} +- {PHI_TOL:.0e}), {:?}, confidence {:.2}",
            report.retained, c.verdict, c.confidence
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut worst_trip: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    for lambda in [1.0, 2.0, 6.0, 10.0] {
        for gamma in [1.0, 1e2, 1e4, 1.5e5] {
            for p in [0.05, 0.5, 0.95] {
                let x = beta_inc_inv(p, lambda, gamma).unwrap();
                worst_trip = worst_trip.max((beta_inc(x, lambda, gamma).unwrap() - p).abs());
                worst_oracle = worst_oracle.max((common::beta_inc_by_quadrature(x, lambda, gamma) - p).abs());
                if lambda == 1.0 {
                    let exact_x = -((1.0 - p).ln() / gamma).exp_m1();
                    worst_closed = worst_closed.max((x - exact_x).abs());
                    let exact_p = -(gamma * (-x).ln_1p()).exp_m1();
                    worst_closed = worst_closed.max((beta_inc(x, 1.0, gamma).unwrap() - exact_p).abs());
                }
            }
        }
    }
    outcome(
        worst_trip <= ROUND_TRIP_TOL && worst_oracle <= ROUND_TRIP_TOL && worst_closed <= CLOSED_FORM_TOL,
        format!(
            "round trip {worst_trip:.1e}, quadrature oracle {worst_oracle:.1e} (tol {ROUND_TRIP_TOL:.0e}), closed form {worst_closed:.1e} (tol {CLOSED_FORM_TOL:.0e})"
        ),
    )
}

fn criterion_5() -> Outcome {
    let config = SolverConfig::default();
    let results: Vec<(f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let n = 1 + (seed % 4) as usize;
            let m = common::row_cap(n) - (seed as usize * 7) % (common::row_cap(n) - n);
            let inst = common::random_instance(seed, n, m);
            let oracle = common::vertex_enumeration(&inst);
            let sys = inst.system();
            let exact = solve(&sys, &config).unwrap();
            let direct = solve_minmax_direct(&sys, &config).unwrap();
            ((exact.eta - oracle).abs(), (direct.eta - exact.eta).abs())
        })
        .collect();
    let vertex = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let minmax = results.iter().map(|r| r.1).fold(0.0, f64::max);
    outcome(
        vertex <= VERTEX_TOL && minmax <= MINMAX_TOL,
        format!(
            "100 instances: max |eta - vertex oracle| {vertex:.1e} (tol {VERTEX_TOL:.0e}), max |simplex - interior| {minmax:.1e} (tol {MINMAX_TOL:.0e})"
        ),
    )
}

fn criterion_6() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);

    // (a) Retention against delta.
    let case = Preset::LogisticGrowth.case_study();
    let amplitude = 0.005 * 2f64.sqrt();
    let ripple = PerturbationField::with_cycles(
        amplitude,
        case.perturbation_cycles,
        case.state_set.lower()[0],
        case.state_set.widths()[0],
    )
    .unwrap();
    let truth = case.physics.clone().with_perturbation(ripple);
    let data = sample_iid(&truth, &case.state_set, 20_000, 11).unwrap();
    let mut retention_ok = true;
    for _ in 0..20 {
        let a = rng.gen_range(1e-5..1.5 * amplitude);
        let b = rng.gen_range(1e-5..1.5 * amplitude);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let r = |d: f64| {
            apply_filter(&data, &case.physics, &FilterConfig::new(d).unwrap())
                .unwrap()
                .retention()
        };
        retention_ok &= r(lo) <= r(hi);
    }

    // (b) Optimal value under constraint addition.
    let config = SolverConfig::default();
    let mut nested_ok = true;
    for seed in 0..20u64 {
        let n = 1 + (seed % 4) as usize;
        let base = common::random_instance(1_000 + seed, n, 8);
        let extra = common::random_instance(2_000 + seed, n, 12);
        let small = base.system();
        let mut large = small.clone();
        large.extend(&extra.system()).unwrap();
        let e1 = solve(&small, &config).unwrap().eta;
        let e2 = solve(&large, &config).unwrap().eta;
        nested_ok &= e2 >= e1 - MONOTONE_SLACK;
    }

    // (c) Violation level against P and c.
    let mut grid_ok = true;
    for c in 1..=8usize {
        let mut prev = f64::INFINITY;
        for p in [20usize, 100, 1_000, 10_000, 100_000, 300_000] {
            let phi = min_violation_level(0.05, c, p).unwrap();
            grid_ok &= phi < prev;
            prev = phi;
            if c > 1 {
                grid_ok &= phi > min_violation_level(0.05, c - 1, p).unwrap();
            }
        }
    }
    outcome(
        retention_ok && nested_ok && grid_ok,
        format!("retention in delta {retention_ok}, eta under row addition {nested_ok}, phi grid {grid_ok}"),
    )
}

fn criterion_7(runs: &[(&str, &RunReport)]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, r) in runs {
        if r.certification.passed() {
            ok &= r.safety.is_safe() && r.safety.trajectories == 1_000 && r.safety.horizon == 500;
            parts.push(format!(
                "{name}: {}/{} violations over {} steps",
                r.safety.violations, r.safety.trajectories, r.safety.horizon
            ));
        } else {
            ok = false;
            parts.push(format!("{name}: certification did not pass"));
        }
    }
    outcome(ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let scan_points = 100_001;
    let mut random_ok = true;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (lo, hi) = (rng.gen_range(-2.0..0.0), rng.gen_range(0.5..3.0));
        let k = rng.gen_range(1..40);
        let mut xs: Vec<f64> = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
        xs.sort_by(f64::total_cmp);
        let scan = common::covering_radius_scan(&xs, lo, hi, scan_points);
        let exact = covering_radius_1d(&mut xs.clone(), lo, hi);
        let resolution = 0.5 * (hi - lo) / (scan_points - 1) as f64;
        worst = worst.max((exact - scan).abs());
        random_ok &= exact >= scan - 1e-12 && exact - scan <= resolution + 1e-12;
    }
    let hand = [
        (vec![0.0, 0.5, 1.0], 0.25),
        (vec![0.2], 0.8),
        (vec![0.0, 1.0], 0.5),
        (vec![0.1, 0.9], 0.4),
    ];
    let hand_ok = hand
        .iter()
        .all(|(xs, r)| (covering_radius_1d(&mut xs.clone(), 0.0, 1.0) - r).abs() < 1e-15);
    outcome(
        random_ok && hand_ok,
        format!("50 random sets within scan resolution (max gap {worst:.1e}); hand-built cases exact {hand_ok}"),
    )
}

fn criterion_9() -> Outcome {
    let coef = |a: f64| {
        let g = GeometryFactor::interval(a).unwrap();
        g.mu(1e-4) / 1e-4
    };
    let (c1, c2) = (coef(2.2), coef(0.9));
    outcome(
        (c1 - 0.455).abs() <= MU_TOL && (c2 - 1.113).abs() <= MU_TOL,
        format!("a=2.2 -> {c1:.4} (0.455 +- {MU_TOL}), a=0.9 -> {c2:.4} (1.113 +- {MU_TOL})"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    results.push((1, criterion_1()));

    let start = Instant::now();
    let sd = run_pipeline(&RunConfig::preset(
        Preset::SupplyDemand,
        GuaranteeMode::Deterministic,
        true,
    ))
    .expect("supply-demand deterministic run")
    .report;
    let sd_secs = start.elapsed().as_secs_f64();
    results.push((2, criterion_2(&sd, sd_secs)));

    let lg = run_pipeline(&RunConfig::preset(
        Preset::LogisticGrowth,
        GuaranteeMode::Probabilistic,
        true,
    ))
    .expect("logistic probabilistic run")
    .report;
    results.push((3, criterion_3(&lg)));
    results.push((4, criterion_4()));
    results.push((5, criterion_5()));
    results.push((6, criterion_6()));
    results.push((7, criterion_7(&[("supply-demand", &sd), ("logistic", &lg)])));
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));

    let mut failed = 0;
    for (k, o) in &results {
        println!("{} criterion {k}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.ok);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

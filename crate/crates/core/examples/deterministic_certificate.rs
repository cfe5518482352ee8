//! Builds a barrier certificate for the supply-demand model from filtered
//! grid data and checks the deterministic condition, stage by stage.

use scenario_barrier::barrier::{
    assemble, AssembleOptions, BarrierCertificate, BarrierTemplate, Regions, DEFAULT_KAPPA,
};
use scenario_barrier::certify::check_deterministic;
use scenario_barrier::filter::{apply_filter, FilterConfig};
use scenario_barrier::lipschitz::{estimate, LipschitzConfig};
use scenario_barrier::models::{PerturbationField, Preset};
use scenario_barrier::sampling::{covering_radius, grid_states, sample_grid};
use scenario_barrier::solver::{solve, SolverConfig};

fn main() -> scenario_barrier::Result<()> {
    let case = Preset::SupplyDemand.case_study();
    let (lo, width) = (case.state_set.lower()[0], case.state_set.widths()[0]);
    let delta = 0.005;
    let truth = case.physics.clone().with_perturbation(PerturbationField::with_cycles(
        delta * 2f64.sqrt(),
        case.perturbation_cycles,
        lo,
        width,
    )?);

    let n = 220_000;
    let data = sample_grid(&truth, &case.state_set, &[n])?;
    let kept = apply_filter(&data, &case.physics, &FilterConfig::new(delta)?)?.retained;

    // Covers of the initial and unsafe sets at the data spacing.
    let density = (n - 1) as f64 / width;
    let count = |w: f64| (w * density).ceil() as usize + 1;
    let x0 = grid_states(&case.initial_set, &[count(case.initial_set.widths()[0])])?;
    let xu = grid_states(&case.unsafe_set, &[count(case.unsafe_set.widths()[0])])?;

    let template = BarrierTemplate::quadratic_1d();
    let regions = Regions {
        state_set: &case.state_set,
        initial_set: &case.initial_set,
        unsafe_set: &case.unsafe_set,
    };
    let rows = assemble(
        &template,
        DEFAULT_KAPPA,
        &kept.pairs,
        &x0,
        &xu,
        &regions,
        &AssembleOptions::default(),
    )?;
    let sol = solve(&rows, &SolverConfig::default())?;
    let cert = BarrierCertificate::from_decision(template, DEFAULT_KAPPA, &sol.decision)?;
    println!("B(x) = {:.4} x^2 + {:.4} x + {:.4}", cert.q[0], cert.q[1], cert.q[2]);
    println!("alpha {:.6}  rho {:.6}  eta {:.6}", cert.alpha, cert.rho, sol.eta);

    let lip = estimate(&cert, &kept.pairs, &LipschitzConfig::default())?;
    let states: Vec<Vec<f64>> = kept.states().map(<[f64]>::to_vec).collect();
    let eps = covering_radius(&states, &case.state_set, 0)?
        .max(covering_radius(&x0, &case.initial_set, 0)?)
        .max(covering_radius(&xu, &case.unsafe_set, 0)?);
    let report = check_deterministic(sol.eta, lip.l, eps)?;
    println!(
        "L {:.3}  eps_max {:.3e}  condition {:.6}  {:?}",
        lip.l, eps, report.condition_value, report.verdict
    );
    Ok(())
}

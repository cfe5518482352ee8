//! Rolls out the supply-demand model and checks empirically that no
//! trajectory from the initial set reaches the unsafe set.

use scenario_barrier::models::{check_safety_empirically, simulate, PerturbationField, Preset};

fn main() -> scenario_barrier::Result<()> {
    let case = Preset::SupplyDemand.case_study();
    let lo = case.state_set.lower()[0];
    let width = case.state_set.widths()[0];
    let ripple = PerturbationField::with_cycles(0.005 * 2f64.sqrt(), case.perturbation_cycles, lo, width)?;
    let truth = case.physics.clone().with_perturbation(ripple);

    let path = simulate(&truth, &[0.55], 12)?;
    for (k, x) in path.iter().enumerate() {
        println!("x[{k:2}] = {:.6}", x[0]);
    }

    let report = check_safety_empirically(&truth, &case.initial_set, &case.unsafe_set, 1_000, 500, 7)?;
    println!(
        "{} trajectories x {} steps: {} entered the unsafe set",
        report.trajectories, report.horizon, report.violations
    );
    Ok(())
}

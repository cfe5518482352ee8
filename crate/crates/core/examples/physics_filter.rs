//! Samples the ground-truth system on a grid and keeps only the pairs that
//! agree with the physics model to within delta.

use scenario_barrier::filter::{apply_filter, FilterConfig};
use scenario_barrier::models::{PerturbationField, Preset};
use scenario_barrier::sampling::{covering_radius, sample_grid};

fn main() -> scenario_barrier::Result<()> {
    let case = Preset::SupplyDemand.case_study();
    let delta = 0.005;
    let ripple = PerturbationField::with_cycles(
        delta * 2f64.sqrt(),
        case.perturbation_cycles,
        case.state_set.lower()[0],
        case.state_set.widths()[0],
    )?;
    let truth = case.physics.clone().with_perturbation(ripple);

    let data = sample_grid(&truth, &case.state_set, &[220_000])?;
    let out = apply_filter(&data, &case.physics, &FilterConfig::new(delta)?)?;
    let summary = out.summary(&data);
    println!(
        "kept {} of {} pairs (retention {:.4})",
        summary.retained, summary.samples, summary.retention
    );
    if let Some(jump) = &summary.max_jump {
        println!(
            "widest discarded run: {} samples between {:.6} and {:.6} (width {:.3e})",
            jump.discarded, jump.from[0], jump.to[0], jump.width
        );
    }

    let states: Vec<Vec<f64>> = out.retained.states().map(<[f64]>::to_vec).collect();
    println!(
        "covering radius before: {:.3e}",
        covering_radius(
            &data.states().map(<[f64]>::to_vec).collect::<Vec<_>>(),
            &case.state_set,
            0
        )?
    );
    println!(
        "covering radius after:  {:.3e}",
        covering_radius(&states, &case.state_set, 0)?
    );
    Ok(())
}

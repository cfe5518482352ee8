//! Re-checks a freshly built certificate against the ground-truth system on
//! dense grids and by simulation.

use scenario_barrier::certify::GuaranteeMode;
use scenario_barrier::models::Preset;
use scenario_barrier::pipeline::{run_pipeline, validate, RunConfig};

fn main() -> scenario_barrier::Result<()> {
    let config = RunConfig::preset(Preset::SupplyDemand, GuaranteeMode::Deterministic, true);
    let outcome = run_pipeline(&config)?;
    let report = validate(&config, &outcome.report.certificate)?;
    let r = &report.residuals;
    println!("grid points {}", report.grid_points);
    println!(
        "max residuals: initial {:.4e}  unsafe {:.4e}  flow {:.4e}",
        r.initial.unwrap_or(f64::NAN),
        r.unsafe_.unwrap_or(f64::NAN),
        r.flow.unwrap_or(f64::NAN)
    );
    println!(
        "conditions hold: {}  empirical violations: {}/{}",
        report.conditions_hold, report.safety.violations, report.safety.trajectories
    );
    Ok(())
}

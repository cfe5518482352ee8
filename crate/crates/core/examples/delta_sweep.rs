//! Trade-off between the filter threshold, retained data and the certified
//! margin on the supply-demand model.

use scenario_barrier::certify::GuaranteeMode;
use scenario_barrier::models::Preset;
use scenario_barrier::pipeline::{sweep, RunConfig, SweepParameter};

fn main() {
    let mut config = RunConfig::preset(Preset::SupplyDemand, GuaranteeMode::Deterministic, true);
    config.write_dataset = false;
    let amplitude = config.delta * 2f64.sqrt();
    let values: Vec<f64> = (1..=20).map(|k| amplitude * k as f64 / 10.0).collect();
    println!(
        "{:>10} {:>8} {:>10} {:>10} {:>11}",
        "delta", "P", "retention", "eta", "condition"
    );
    for row in sweep(&config, SweepParameter::Delta, &values) {
        match (&row.error, row.eta, row.condition) {
            (None, Some(eta), Some(cond)) => println!(
                "{:>10.5} {:>8} {:>10.4} {:>10.5} {:>11.5}",
                row.value, row.retained, row.retention, eta, cond
            ),
            (err, ..) => println!("{:>10.5} {}", row.value, err.as_deref().unwrap_or("no result")),
        }
    }
}

//! Runs the supply-demand experiment and writes the CSV tables used for the
//! barrier, level-set and sample plots.

use scenario_barrier::certify::GuaranteeMode;
use scenario_barrier::models::Preset;
use scenario_barrier::pipeline::{cmd_run, plotdata, RunConfig};

fn main() -> scenario_barrier::Result<()> {
    let dir = std::env::temp_dir().join("scenario-barrier-plot");
    let mut config = RunConfig::preset(Preset::SupplyDemand, GuaranteeMode::Deterministic, true);
    config.write_dataset = false;
    let (report, code) = cmd_run(&config, &dir)?;
    println!("run finished with exit code {code}, eta {:.6}", report.solve.eta);
    for path in plotdata(&dir.join("report.json"), &dir.join("plot"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

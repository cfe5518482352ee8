//! Runs one built-in experiment and prints the headline numbers.
//!
//! cargo run --release --example run_preset -- supply-demand deterministic [traditional]

use scenario_barrier::certify::GuaranteeMode;
use scenario_barrier::models::Preset;
use scenario_barrier::pipeline::{run_pipeline, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let preset = match args.first().map(String::as_str) {
        Some("logistic-growth") => Preset::LogisticGrowth,
        _ => Preset::SupplyDemand,
    };
    let mode: GuaranteeMode = args.get(1).map(String::as_str).unwrap_or("deterministic").parse()?;
    let filter = args.get(2).map(String::as_str) != Some("traditional");
    let mut config = RunConfig::preset(preset, mode, filter);
    if let Some(seed) = args.get(3) {
        config.seed = seed.parse()?;
    }

    let outcome = run_pipeline(&config)?;
    let r = &outcome.report;
    println!("{}", config.name.as_deref().unwrap_or("run"));
    println!("samples {}  retained {}", r.samples, r.retained);
    if let Some(f) = &r.filter {
        println!("retention {:.4}", f.retention);
    }
    let cert = &r.certificate;
    println!("q {:?}  alpha {:.6}  rho {:.6}", cert.q, cert.alpha, cert.rho);
    println!("eta {:.6}  iterations {}", r.solve.eta, r.solve.iterations);
    println!(
        "L {:.6} (l1 {:.6}, l2 {:.6})",
        r.lipschitz.l, r.lipschitz.l1, r.lipschitz.l2
    );
    let c = &r.certification;
    if let Some(e) = c.eps_max {
        println!("eps_max {e:.6e}");
    }
    if let Some(p) = c.phi {
        println!("phi {p:.6e}  mu_inv {:.6e}", c.mu_inv_phi.unwrap_or(f64::NAN));
    }
    println!("condition {:.6}  verdict {:?}", c.condition_value, c.verdict);
    println!("empirical violations {}/{}", r.safety.violations, r.safety.trajectories);
    for (stage, secs) in &r.timing.stages {
        println!("  {stage:<10} {secs:.3}s");
    }
    Ok(())
}

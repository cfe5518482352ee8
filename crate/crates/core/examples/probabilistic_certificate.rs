//! Logistic growth with i.i.d. samples: certify with 95% confidence.

use scenario_barrier::certify::GuaranteeMode;
use scenario_barrier::models::Preset;
use scenario_barrier::pipeline::{run_pipeline, RunConfig};

fn main() -> scenario_barrier::Result<()> {
    let config = RunConfig::preset(Preset::LogisticGrowth, GuaranteeMode::Probabilistic, true);
    let outcome = run_pipeline(&config)?;
    let r = &outcome.report;
    let c = &r.certification;
    println!("retained {} of {} samples", r.retained, r.samples);
    println!(
        "B(x) = {:.4} x^2 + {:.4} x + {:.4}",
        r.certificate.q[0], r.certificate.q[1], r.certificate.q[2]
    );
    println!(
        "eta {:.6}  L {:.3}  phi {:.4e}  mu^-1(phi) {:.4e}",
        c.eta,
        c.lipschitz,
        c.phi.unwrap_or(f64::NAN),
        c.mu_inv_phi.unwrap_or(f64::NAN)
    );
    println!(
        "condition {:.6}  {:?} with confidence {:.2}",
        c.condition_value, c.verdict, c.confidence
    );
    Ok(())
}

//! How the violation level phi shrinks with the retained sample count.

use scenario_barrier::certify::{min_violation_level, GeometryFactor};

fn main() -> scenario_barrier::Result<()> {
    let interval = GeometryFactor::interval(0.9)?;
    println!(
        "{:>9} {:>12} {:>12} {:>12}",
        "P", "phi (c=5)", "phi (c=6)", "radius c=6"
    );
    for p in [1_000, 10_000, 45_000, 100_000, 130_234, 150_260, 300_000] {
        let phi5 = min_violation_level(0.05, 5, p)?;
        let phi6 = min_violation_level(0.05, 6, p)?;
        println!("{p:>9} {phi5:>12.4e} {phi6:>12.4e} {:>12.4e}", interval.mu_inv(phi6)?);
    }
    Ok(())
}

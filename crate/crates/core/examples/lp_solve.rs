//! Solves a small min-max program with the simplex solver and the interior
//! cross-check: fit a line to four points in the Chebyshev sense.

use scenario_barrier::barrier::{ConstraintSystem, RowTag};
use scenario_barrier::solver::{solve, solve_minmax_direct, SolverConfig};

fn main() -> scenario_barrier::Result<()> {
    // Decision d = [slope, intercept]; rows +-(slope t + intercept - y) <= eta.
    let points = [(0.0, 0.1), (1.0, 0.9), (2.0, 2.2), (3.0, 2.8)];
    let mut coeffs = Vec::new();
    let mut offsets = Vec::new();
    for (t, y) in points {
        coeffs.extend([t, 1.0]);
        offsets.push(-y);
        coeffs.extend([-t, -1.0]);
        offsets.push(y);
    }
    let tags = vec![RowTag::Auxiliary; offsets.len()];
    let bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); 2];
    let system = ConstraintSystem::raw(2, coeffs, offsets, tags, bounds)?;

    let config = SolverConfig::default();
    let exact = solve(&system, &config)?;
    let direct = solve_minmax_direct(&system, &config)?;
    println!(
        "simplex:  eta {:.9}  slope {:.6}  intercept {:.6}  active rows {:?}",
        exact.eta, exact.decision[0], exact.decision[1], exact.active_rows
    );
    println!(
        "interior: eta {:.9}  slope {:.6}  intercept {:.6}",
        direct.eta, direct.decision[0], direct.decision[1]
    );
    Ok(())
}

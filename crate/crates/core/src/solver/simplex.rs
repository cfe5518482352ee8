//! Revised simplex on the dual of the epigraph LP.
//!
//! Primal: `min eta` over `x = (d, eta)` with `a_k . x <= b_k`. Its dual in
//! standard form is `min b . y` subject to `sum_k y_k a_k = -e_eta`, `y >= 0`,
//! which has only `n = nvars + 1` equality rows, so every basis is a tiny
//! dense matrix. The simplex multipliers of a dual basis are a primal vertex
//! and the reduced cost of column `k` is that vertex's slack in row `k`.

use rayon::prelude::*;

use super::dense::Lu;
use super::{SolveResult, SolveStatus, SolverConfig};
use crate::barrier::ConstraintSystem;
use crate::error::{Error, Result};

/// Constraint columns: the system rows followed by finite variable bounds.
struct Columns<'a> {
    sys: &'a ConstraintSystem,
    /// `(variable, sign, bound)`: `sign * d_j <= sign * bound`.
    bound_rows: Vec<(usize, f64, f64)>,
    n: usize,
}

impl Columns<'_> {
    fn count(&self) -> usize {
        self.sys.len() + self.bound_rows.len()
    }

    fn vector(&self, k: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if k < self.sys.len() {
            let (a, _) = self.sys.row(k);
            out[..a.len()].copy_from_slice(a);
            out[self.n - 1] = -1.0;
        } else {
            let (j, s, _) = self.bound_rows[k - self.sys.len()];
            out[j] = s;
        }
    }

    fn cost(&self, k: usize) -> f64 {
        if k < self.sys.len() {
            -self.sys.row(k).1
        } else {
            let (_, s, b) = self.bound_rows[k - self.sys.len()];
            s * b
        }
    }

    /// `b_k - a_k . x`.
    fn slack(&self, k: usize, x: &[f64]) -> f64 {
        if k < self.sys.len() {
            let (a, off) = self.sys.row(k);
            let ax: f64 = a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() - x[self.n - 1];
            -off - ax
        } else {
            let (j, s, b) = self.bound_rows[k - self.sys.len()];
            s * b - s * x[j]
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Tableau<'a> {
    cols: Columns<'a>,
    cfg: &'a SolverConfig,
    n: usize,
    /// Column index per basis position; indices `>= cols.count()` are artificials.
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Sign of each artificial column `sigma_j e_j`.
    art_sign: Vec<f64>,
    rhs: Vec<f64>,
    iterations: usize,
}

impl<'a> Tableau<'a> {
    fn column(&self, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        if k < self.cols.count() {
            self.cols.vector(k, &mut v);
        } else {
            let j = k - self.cols.count();
            v[j] = self.art_sign[j];
        }
        v
    }

    fn is_artificial(&self, k: usize) -> bool {
        k >= self.cols.count()
    }

    fn cost(&self, k: usize, phase: Phase) -> f64 {
        match (phase, self.is_artificial(k)) {
            (Phase::One, true) => 1.0,
            (Phase::One, false) => 0.0,
            (Phase::Two, true) => 0.0,
            (Phase::Two, false) => self.cols.cost(k),
        }
    }

    fn factor(&self) -> Result<Lu> {
        let cols: Vec<Vec<f64>> = self.basis.iter().map(|&k| self.column(k)).collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        Lu::from_columns(&refs, 1e-13).ok_or_else(|| Error::Solver("basis became singular".into()))
    }

    /// Entering column by most negative reduced cost (lowest index on ties),
    /// or the first negative one under Bland's rule.
    fn price(&self, pi: &[f64], phase: Phase, bland: bool) -> Option<(usize, f64)> {
        let tol = self.cfg.optimality_tol;
        let reduced = |k: usize| -> f64 {
            match phase {
                Phase::Two => self.cols.slack(k, pi),
                Phase::One => {
                    let mut v = vec![0.0; self.n];
                    self.cols.vector(k, &mut v);
                    -v.iter().zip(pi).map(|(a, b)| a * b).sum::<f64>()
                }
            }
        };
        let m = self.cols.count();
        if bland {
            return (0..m)
                .into_par_iter()
                .filter(|&k| !self.is_basic[k])
                .map(|k| (k, reduced(k)))
                .find_first(|(_, r)| *r < -tol);
        }
        (0..m)
            .into_par_iter()
            .filter(|&k| !self.is_basic[k])
            .map(|k| (k, reduced(k)))
            .filter(|(_, r)| *r < -tol)
            .reduce_with(|a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
    }

    /// Leaving basis position for entering direction `delta`, or `None` if the
    /// direction is unbounded.
    fn ratio(&self, y: &[f64], delta: &[f64], phase: Phase) -> Option<(usize, f64)> {
        let tol = self.cfg.feasibility_tol;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.n {
            let k = self.basis[i];
            let r = if phase == Phase::Two && self.is_artificial(k) && delta[i].abs() > tol {
                // Artificials sit at zero after phase one and must not move.
                0.0
            } else if delta[i] > tol {
                y[i].max(0.0) / delta[i]
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bi, br)) => {
                    let bk = self.basis[bi];
                    r < br - 1e-12
                        || ((r - br).abs() <= 1e-12
                            && ((self.is_artificial(k) && !self.is_artificial(bk))
                                || (self.is_artificial(k) == self.is_artificial(bk) && k < bk)))
                }
            };
            if better {
                best = Some((i, r));
            }
        }
        best
    }

    fn pivot(&mut self, pos: usize, entering: usize) {
        self.is_basic[self.basis[pos]] = false;
        self.basis[pos] = entering;
        self.is_basic[entering] = true;
    }

    /// Runs one phase: `Some(true)` at optimality, `Some(false)` on an
    /// unbounded direction, `None` at the iteration limit.
    fn run(&mut self, phase: Phase) -> Result<Option<bool>> {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= self.cfg.max_iterations {
                return Ok(None);
            }
            let lu = self.factor()?;
            let y = lu.solve(&self.rhs);
            let cb: Vec<f64> = self.basis.iter().map(|&k| self.cost(k, phase)).collect();
            let pi = lu.solve_transpose(&cb);
            let Some((entering, _)) = self.price(&pi, phase, bland) else {
                return Ok(Some(true));
            };
            let delta = lu.solve(&self.column(entering));
            let Some((pos, step)) = self.ratio(&y, &delta, phase) else {
                return Ok(Some(false));
            };
            self.pivot(pos, entering);
            self.iterations += 1;
            if step <= self.cfg.feasibility_tol {
                degenerate += 1;
                if degenerate > self.cfg.degenerate_limit {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
        }
    }

    fn multipliers(&self, phase: Phase) -> Result<(Vec<f64>, Vec<f64>)> {
        let lu = self.factor()?;
        let cb: Vec<f64> = self.basis.iter().map(|&k| self.cost(k, phase)).collect();
        Ok((lu.solve(&self.rhs), lu.solve_transpose(&cb)))
    }

    /// Pivots zero-level artificials out wherever a real column can replace them.
    fn evict_artificials(&mut self) -> Result<()> {
        for pos in 0..self.n {
            if !self.is_artificial(self.basis[pos]) {
                continue;
            }
            let lu = self.factor()?;
            let mut e = vec![0.0; self.n];
            e[pos] = 1.0;
            let row = lu.solve_transpose(&e);
            let m = self.cols.count();
            let pick = (0..m)
                .into_par_iter()
                .filter(|&k| !self.is_basic[k])
                .map(|k| {
                    let mut v = vec![0.0; self.n];
                    self.cols.vector(k, &mut v);
                    (k, v.iter().zip(&row).map(|(a, b)| a * b).sum::<f64>().abs())
                })
                .filter(|(_, w)| *w > 1e-7)
                .reduce_with(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
            if let Some((k, _)) = pick {
                self.pivot(pos, k);
                self.iterations += 1;
            }
        }
        Ok(())
    }
}

pub(crate) fn solve(sys: &ConstraintSystem, cfg: &SolverConfig) -> Result<SolveResult> {
    let nvars = sys.nvars();
    let n = nvars + 1;
    let mut bound_rows = Vec::new();
    for (j, &(lo, hi)) in sys.bounds().iter().enumerate() {
        if hi.is_finite() {
            bound_rows.push((j, 1.0, hi));
        }
        if lo.is_finite() {
            bound_rows.push((j, -1.0, lo));
        }
    }
    let cols = Columns { sys, bound_rows, n };
    let m = cols.count();
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = -1.0;
    let art_sign: Vec<f64> = rhs.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut is_basic = vec![false; m + n];
    for b in is_basic[m..].iter_mut() {
        *b = true;
    }
    let mut t = Tableau {
        cols,
        cfg,
        n,
        basis: (m..m + n).collect(),
        is_basic,
        art_sign,
        rhs,
        iterations: 0,
    };

    let limit = |t: &Tableau, d: Vec<f64>| -> SolveResult {
        let d = clamp(sys, d);
        SolveResult {
            eta: sys.max_row_value(&d),
            decision: d,
            status: SolveStatus::IterationLimit,
            active_rows: Vec::new(),
            iterations: t.iterations,
        }
    };

    match t.run(Phase::One)? {
        None => return Ok(limit(&t, vec![0.0; nvars])),
        Some(false) => return Err(Error::Solver("phase one has an unbounded direction".into())),
        Some(true) => {}
    }
    let (y, _) = t.multipliers(Phase::One)?;
    let infeasibility: f64 = t
        .basis
        .iter()
        .zip(&y)
        .filter(|(k, _)| t.is_artificial(**k))
        .map(|(_, v)| v.abs())
        .sum();
    if infeasibility > 1e-7 {
        // No dual feasible point: the primal objective is unbounded below.
        return Ok(SolveResult {
            eta: f64::NEG_INFINITY,
            decision: vec![f64::NAN; nvars],
            status: SolveStatus::Unbounded,
            active_rows: Vec::new(),
            iterations: t.iterations,
        });
    }
    t.evict_artificials()?;

    let outcome = t.run(Phase::Two)?;
    let (_, x) = t.multipliers(Phase::Two)?;
    match outcome {
        None => return Ok(limit(&t, x[..nvars].to_vec())),
        Some(false) => {
            return Ok(SolveResult {
                eta: f64::NAN,
                decision: x[..nvars].to_vec(),
                status: SolveStatus::Infeasible,
                active_rows: Vec::new(),
                iterations: t.iterations,
            })
        }
        Some(true) => {}
    }
    let d = clamp(sys, x[..nvars].to_vec());
    let eta = sys.max_row_value(&d);
    if (eta - x[n - 1]).abs() > 1e-6 * (1.0 + eta.abs()) {
        log::warn!("simplex vertex eta {} differs from max row value {eta}", x[n - 1]);
    }
    Ok(SolveResult {
        active_rows: super::active_rows(sys, &d, eta, cfg.feasibility_tol),
        eta,
        decision: d,
        status: SolveStatus::Optimal,
        iterations: t.iterations,
    })
}

fn clamp(sys: &ConstraintSystem, mut d: Vec<f64>) -> Vec<f64> {
    for (v, (lo, hi)) in d.iter_mut().zip(sys.bounds()) {
        *v = v.clamp(*lo, *hi);
    }
    d
}

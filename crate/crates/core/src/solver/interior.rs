//! Log-barrier Newton method on the epigraph `eta >= row_i(d)`.
//!
//! Used as an independent cross-check of the simplex: it never looks at a
//! vertex and reaches the optimum from the interior.

use rayon::prelude::*;

use super::dense::Lu;
use super::{SolveResult, SolveStatus, SolverConfig};
use crate::barrier::ConstraintSystem;
use crate::error::{Error, Result};

/// Stand-in box for variables without finite bounds.
const FREE_BOX: f64 = 1e8;

struct Problem<'a> {
    sys: &'a ConstraintSystem,
    /// Variables that appear in at least one row.
    live: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    artificial: Vec<bool>,
    /// Values for variables outside `live`.
    fixed: Vec<f64>,
    /// Fixed variables that still carry row coefficients.
    pinned: Vec<usize>,
}

impl Problem<'_> {
    fn k(&self) -> usize {
        self.live.len() + 1
    }

    fn decision(&self, z: &[f64]) -> Vec<f64> {
        let mut d = self.fixed.clone();
        for (i, &j) in self.live.iter().enumerate() {
            d[j] = z[i];
        }
        d
    }

    fn row_value(&self, i: usize, z: &[f64]) -> f64 {
        let (a, b) = self.sys.row(i);
        let mut v = b;
        for (l, &j) in self.live.iter().enumerate() {
            v += a[j] * z[l];
        }
        for &j in &self.pinned {
            v += a[j] * self.fixed[j];
        }
        v
    }

    /// Barrier value, or `None` outside the domain.
    fn value(&self, z: &[f64], t: f64) -> Option<f64> {
        let k = self.k();
        let eta = z[k - 1];
        let mut f = t * eta;
        for ((zi, l), u) in z[..k - 1].iter().zip(&self.lower).zip(&self.upper) {
            let (lo, hi) = (zi - l, u - zi);
            if lo <= 0.0 || hi <= 0.0 {
                return None;
            }
            f -= lo.ln() + hi.ln();
        }
        let rows = (0..self.sys.len())
            .into_par_iter()
            .map(|i| {
                let s = eta - self.row_value(i, z);
                if s > 0.0 {
                    s.ln()
                } else {
                    f64::NAN
                }
            })
            .sum::<f64>();
        if rows.is_nan() {
            return None;
        }
        Some(f - rows)
    }

    fn gradient_hessian(&self, z: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let k = self.k();
        let eta = z[k - 1];
        let (mut g, mut h) = (0..self.sys.len())
            .into_par_iter()
            .fold(
                || (vec![0.0; k], vec![0.0; k * k], vec![0.0; k]),
                |(mut g, mut h, mut a), i| {
                    let (row, _) = self.sys.row(i);
                    for (l, &j) in self.live.iter().enumerate() {
                        a[l] = row[j];
                    }
                    a[k - 1] = -1.0;
                    let s = eta - self.row_value(i, z);
                    let inv = 1.0 / s;
                    for p in 0..k {
                        g[p] += a[p] * inv;
                        let ap = a[p] * inv * inv;
                        for q in 0..=p {
                            h[p * k + q] += ap * a[q];
                        }
                    }
                    (g, h, a)
                },
            )
            .map(|(g, h, _)| (g, h))
            .reduce(
                || (vec![0.0; k], vec![0.0; k * k]),
                |(mut g1, mut h1), (g2, h2)| {
                    g1.iter_mut().zip(&g2).for_each(|(a, b)| *a += b);
                    h1.iter_mut().zip(&h2).for_each(|(a, b)| *a += b);
                    (g1, h1)
                },
            );
        g[k - 1] += t;
        for (i, ((zi, l), u)) in z[..k - 1].iter().zip(&self.lower).zip(&self.upper).enumerate() {
            let (lo, hi) = (zi - l, u - zi);
            g[i] += 1.0 / hi - 1.0 / lo;
            h[i * k + i] += 1.0 / (lo * lo) + 1.0 / (hi * hi);
        }
        for p in 0..k {
            for q in 0..p {
                h[q * k + p] = h[p * k + q];
            }
        }
        (g, h)
    }
}

/// Factors the Hessian, adding a growing diagonal shift when roundoff leaves
/// a zero pivot.
fn factor_shifted(k: usize, h: Vec<f64>) -> Result<Lu> {
    let scale = (0..k)
        .map(|i| h[i * k + i].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    for _ in 0..8 {
        let mut a = h.clone();
        for i in 0..k {
            a[i * k + i] += shift;
        }
        if let Some(lu) = Lu::from_rows(k, a, 0.0) {
            return Ok(lu);
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
    }
    Err(Error::Solver("singular barrier Hessian".into()))
}

pub(crate) fn solve(sys: &ConstraintSystem, cfg: &SolverConfig) -> Result<SolveResult> {
    let nvars = sys.nvars();
    let used: Vec<bool> = (0..nvars)
        .map(|j| (0..sys.len()).any(|i| sys.row(i).0[j] != 0.0))
        .collect();
    let mut fixed = vec![0.0; nvars];
    let (mut live, mut lower, mut upper, mut artificial) = (vec![], vec![], vec![], vec![]);
    let mut pinned = Vec::new();
    for (j, &(lo, hi)) in sys.bounds().iter().enumerate() {
        if !used[j] || lo == hi {
            fixed[j] = 0.0f64.clamp(lo, hi);
            if used[j] {
                pinned.push(j);
            }
            continue;
        }
        live.push(j);
        artificial.push(!lo.is_finite() || !hi.is_finite());
        lower.push(if lo.is_finite() { lo } else { -FREE_BOX });
        upper.push(if hi.is_finite() { hi } else { FREE_BOX });
    }
    let p = Problem {
        sys,
        live,
        lower,
        upper,
        artificial,
        fixed,
        pinned,
    };
    let k = p.k();

    let mut z: Vec<f64> = (0..k - 1)
        .map(|i| {
            if p.lower[i] < 0.0 && p.upper[i] > 0.0 {
                0.0
            } else {
                0.5 * (p.lower[i] + p.upper[i])
            }
        })
        .collect();
    let start = (0..sys.len())
        .into_par_iter()
        .map(|i| p.row_value(i, &z))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    z.push(start + 1.0 + start.abs());

    let barrier_terms = (sys.len() + 2 * (k - 1)) as f64;
    let mut t = 1.0;
    let mut newton = 0usize;
    let mut converged = false;
    while newton < cfg.max_newton {
        // Centering.
        loop {
            if newton >= cfg.max_newton {
                break;
            }
            let (g, h) = p.gradient_hessian(&z, t);
            let lu = factor_shifted(k, h)?;
            let step: Vec<f64> = lu.solve(&g).iter().map(|v| -v).collect();
            let decrement: f64 = -g.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
            newton += 1;
            if decrement <= 2e-10 {
                break;
            }
            let f0 = p.value(&z, t).expect("iterate stays interior");
            let mut s = 1.0;
            let mut moved = false;
            while s > 1e-14 {
                let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + s * b).collect();
                if let Some(f) = p.value(&trial, t) {
                    if f <= f0 - 0.25 * s * decrement {
                        z = trial;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let eta = z[k - 1];
        if barrier_terms / t <= cfg.gap_tolerance * (1.0 + eta.abs()) {
            converged = true;
            break;
        }
        t *= cfg.barrier_growth;
    }

    let d = p.decision(&z);
    let eta = sys.max_row_value(&d);
    let runaway = p
        .live
        .iter()
        .enumerate()
        .any(|(i, _)| p.artificial[i] && z[i].abs() > 0.99 * FREE_BOX);
    let status = if runaway {
        SolveStatus::Unbounded
    } else if converged {
        SolveStatus::Optimal
    } else {
        SolveStatus::IterationLimit
    };
    Ok(SolveResult {
        active_rows: if status == SolveStatus::Optimal {
            super::active_rows(sys, &d, eta, cfg.active_tolerance_minmax)
        } else {
            Vec::new()
        },
        eta,
        decision: d,
        status,
        iterations: newton,
    })
}

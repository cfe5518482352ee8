//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenario_barrier::barrier::{ConstraintSystem, RowTag};

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let pair = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol.max(50.0 * f64::EPSILON * k.abs()) || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod over `[a, b]`, pre-split at `breaks`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|t| *t > a && *t < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let n = (pts.len() - 1) as f64;
    pts.windows(2).map(|w| adaptive(f, w[0], w[1], tol / n, 40)).sum()
}

/// `I_x(a, b)` from the defining integral, with the integrand rescaled to
/// peak at 1 and the domain split around the bulk of the density.
pub fn beta_inc_by_quadrature(x: f64, a: f64, b: f64) -> f64 {
    let mode = if a + b > 2.0 {
        ((a - 1.0) / (a + b - 2.0)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    let log_at = |t: f64| {
        let mut v = 0.0;
        if a != 1.0 {
            v += (a - 1.0) * (t.ln() - mode.ln());
        }
        if b != 1.0 {
            v += (b - 1.0) * ((-t).ln_1p() - (-mode).ln_1p());
        }
        v
    };
    // Kronrod nodes are interior, so the endpoints are never evaluated.
    let f = |t: f64| log_at(t).exp();
    let mean = a / (a + b);
    let sd = (a * b / ((a + b) * (a + b) * (a + b + 1.0))).sqrt();
    let mut breaks = vec![x, mode, mean];
    for k in -6..=12 {
        let s = sd * 2f64.powi(k);
        breaks.push(mean - s);
        breaks.push(mean + s);
        breaks.push(mode + s);
    }
    let scale = integrate(&f, 0.0, 1.0, &breaks, 1e-6);
    let tol = 1e-15 * scale;
    let left = integrate(&f, 0.0, x, &breaks, tol);
    let right = integrate(&f, x, 1.0, &breaks, tol);
    left / (left + right)
}

/// Rows `a_i . d + b_i - eta <= 0` with box bounds, stored densely.
#[derive(Clone, Debug)]
pub struct Instance {
    pub n: usize,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub bounds: Vec<(f64, f64)>,
}

impl Instance {
    pub fn system(&self) -> ConstraintSystem {
        let coeffs = self.rows.iter().flat_map(|(a, _)| a.iter().copied()).collect();
        let offsets = self.rows.iter().map(|(_, b)| *b).collect();
        let tags = vec![RowTag::Auxiliary; self.rows.len()];
        ConstraintSystem::raw(self.n, coeffs, offsets, tags, self.bounds.clone()).unwrap()
    }

    pub fn max_row(&self, d: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|(a, b)| a.iter().zip(d).map(|(x, y)| x * y).sum::<f64>() + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Most rows used for an instance with `n` variables, keeping the vertex
/// enumeration below a few hundred thousand subsets.
pub fn row_cap(n: usize) -> usize {
    match n {
        0..=2 => 60,
        3 => 40,
        _ => 25,
    }
}

/// Random bounded instance; every fourth one uses small integers to force
/// degenerate vertices.
pub fn random_instance(seed: u64, n: usize, m: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let integer = seed % 4 == 3;
    let draw = |rng: &mut ChaCha8Rng| {
        if integer {
            rng.gen_range(-2i32..=2) as f64
        } else {
            rng.gen_range(-1.0..1.0)
        }
    };
    let rows = (0..m)
        .map(|_| ((0..n).map(|_| draw(&mut rng)).collect(), draw(&mut rng)))
        .collect();
    let bounds = (0..n)
        .map(|_| {
            let w = if integer { 2.0 } else { rng.gen_range(0.5..5.0) };
            (-w, w)
        })
        .collect();
    Instance { n, rows, bounds }
}

/// Dense Gaussian elimination with partial pivoting; `None` if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let p = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(r);
                for (x, p) in bottom[0][col..k].iter_mut().zip(&top[col][col..k]) {
                    *x -= f * p;
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < total - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Minimum `eta` over all vertices of `{(d, eta) : rows <= eta, d in box}`.
pub fn vertex_enumeration(inst: &Instance) -> f64 {
    let n = inst.n;
    let k = n + 1;
    // Hyperplanes in (d, eta): rows a.d - eta = -b, then d_j = lo_j, d_j = hi_j.
    let mut planes: Vec<(Vec<f64>, f64, Option<usize>)> = inst
        .rows
        .iter()
        .map(|(a, b)| {
            let mut c = a.clone();
            c.push(-1.0);
            (c, -b, None)
        })
        .collect();
    for (j, (lo, hi)) in inst.bounds.iter().enumerate() {
        for v in [*lo, *hi] {
            let mut c = vec![0.0; k];
            c[j] = 1.0;
            planes.push((c, v, Some(j)));
        }
    }
    let total = planes.len();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut seen = vec![false; n];
        let clash = idx.iter().any(|&i| match planes[i].2 {
            Some(j) => std::mem::replace(&mut seen[j], true),
            None => false,
        });
        if !clash {
            let a = idx.iter().map(|&i| planes[i].0.clone()).collect();
            let b = idx.iter().map(|&i| planes[i].1).collect();
            if let Some(z) = solve_dense(a, b) {
                let (d, eta) = z.split_at(n);
                let inside = d
                    .iter()
                    .zip(&inst.bounds)
                    .all(|(x, (lo, hi))| *x >= lo - 1e-9 && *x <= hi + 1e-9);
                if inside && inst.max_row(d) <= eta[0] + 1e-9 {
                    best = best.min(eta[0]);
                }
            }
        }
        if !next_combination(&mut idx, total) {
            break;
        }
    }
    best
}

/// Largest distance from a point of `[lo, hi]` to `xs`, scanned on `m` points.
pub fn covering_radius_scan(xs: &[f64], lo: f64, hi: f64, m: usize) -> f64 {
    (0..m)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / (m - 1) as f64;
            xs.iter().map(|x| (x - t).abs()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

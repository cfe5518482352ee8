//! Data-driven Lipschitz estimates for `B(x)` and `B(f(x)) - kappa B(x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier::BarrierCertificate;
use crate::certify::ln_gamma;
use crate::error::{Error, Result};
use crate::sampling::SamplePair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LipschitzMethod {
    PairwiseMax,
    ExtremeValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LipschitzConfig {
    pub method: LipschitzMethod,
    /// Applied to the pairwise maximum only.
    pub safety_multiplier: f64,
    pub pair_budget: usize,
    pub seed: u64,
    pub batches: usize,
    pub batch_size: usize,
    /// Extreme-value slopes pair each sample with one of its nearest
    /// `neighbour_span` successors in sorted order.
    pub neighbour_span: usize,
}

impl Default for LipschitzConfig {
    fn default() -> Self {
        Self {
            method: LipschitzMethod::PairwiseMax,
            safety_multiplier: 1.1,
            pair_budget: 1_000_000,
            seed: 0,
            batches: 100,
            batch_size: 1_000,
            neighbour_span: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// Constant of `B(x)`.
    pub l1: f64,
    /// Constant of `B(f(x)) - kappa B(x)`.
    pub l2: f64,
    /// `max(l1, l2)`.
    pub l: f64,
    pub method: LipschitzMethod,
    pub samples_used: usize,
    pub safety_multiplier: f64,
    /// Largest raw slopes seen, before any multiplier or fit.
    pub observed_l1: f64,
    pub observed_l2: f64,
}

/// Per-sample values `(B(x), B(y) - kappa B(x))`.
fn values(cert: &BarrierCertificate, pairs: &[SamplePair]) -> Vec<(f64, f64)> {
    pairs
        .par_iter()
        .map(|p| {
            let b = cert.value(&p.state);
            (b, cert.value(&p.successor) - cert.kappa * b)
        })
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Slopes of both expressions for the index pair, or `None` if the states coincide.
fn slope(pairs: &[SamplePair], vals: &[(f64, f64)], i: usize, j: usize) -> Option<(f64, f64)> {
    let d = distance(&pairs[i].state, &pairs[j].state);
    if d == 0.0 {
        return None;
    }
    Some(((vals[i].0 - vals[j].0).abs() / d, (vals[i].1 - vals[j].1).abs() / d))
}

fn sorted_order(pairs: &[SamplePair]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&i, &j| {
        pairs[i]
            .state
            .iter()
            .zip(&pairs[j].state)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    order
}

/// Index pairs: every pair when they fit in the budget, otherwise the
/// neighbours in sorted order plus seeded random distinct pairs.
fn pair_list(pairs: &[SamplePair], cfg: &LipschitzConfig) -> Vec<(usize, usize)> {
    let n = pairs.len();
    let all = n.saturating_mul(n - 1) / 2;
    if all <= cfg.pair_budget {
        return (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    }
    let order = sorted_order(pairs);
    let mut list: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0], w[1])).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while list.len() < cfg.pair_budget.max(n - 1) {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            list.push((i, j));
        }
    }
    list
}

pub fn estimate_pairwise(
    cert: &BarrierCertificate,
    pairs: &[SamplePair],
    config: &LipschitzConfig,
) -> Result<LipschitzEstimate> {
    if pairs.len() < 2 {
        return Err(Error::DegenerateData("need at least two samples".into()));
    }
    if !(config.safety_multiplier >= 1.0) {
        return Err(Error::InvalidInput("safety multiplier must be >= 1".into()));
    }
    let vals = values(cert, pairs);
    let list = pair_list(pairs, config);
    let (m1, m2, used) = list
        .par_iter()
        .filter_map(|&(i, j)| slope(pairs, &vals, i, j))
        .fold(
            || (0.0f64, 0.0f64, 0usize),
            |(a, b, n), (s1, s2)| (a.max(s1), b.max(s2), n + 1),
        )
        .reduce(|| (0.0, 0.0, 0), |x, y| (x.0.max(y.0), x.1.max(y.1), x.2 + y.2));
    if used == 0 {
        return Err(Error::DegenerateData("all sampled states coincide".into()));
    }
    let k = config.safety_multiplier;
    Ok(LipschitzEstimate {
        l1: k * m1,
        l2: k * m2,
        l: k * m1.max(m2),
        method: LipschitzMethod::PairwiseMax,
        samples_used: used,
        safety_multiplier: k,
        observed_l1: m1,
        observed_l2: m2,
    })
}

/// Upper endpoint of a reverse-Weibull fit to `maxima` by moment matching.
/// Never below the largest observation.
pub fn reverse_weibull_location(maxima: &[f64]) -> f64 {
    let n = maxima.len() as f64;
    let top = maxima.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = maxima.iter().sum::<f64>() / n;
    let var = maxima.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
    if !(var > 1e-24 * (1.0 + mean * mean)) {
        return top;
    }
    let sd = var.sqrt();
    let skew = maxima.iter().map(|m| ((m - mean) / sd).powi(3)).sum::<f64>() / n;
    // M = omega - W with W ~ Weibull(k, s): skew(M) = -skew(W).
    let g = |r: f64| ln_gamma(1.0 + r).exp();
    let weibull_skew = |k: f64| {
        let (g1, g2, g3) = (g(1.0 / k), g(2.0 / k), g(3.0 / k));
        let v = g2 - g1 * g1;
        (g3 - 3.0 * g1 * g2 + 2.0 * g1.powi(3)) / v.powf(1.5)
    };
    let target = -skew;
    let (mut lo, mut hi) = (0.3f64, 50.0f64);
    let k = if target >= weibull_skew(lo) {
        lo
    } else if target <= weibull_skew(hi) {
        hi
    } else {
        // Weibull skewness falls monotonically in k on this range.
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if weibull_skew(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (g1, g2) = (g(1.0 / k), g(2.0 / k));
    let scale = sd / (g2 - g1 * g1).sqrt();
    let omega = mean + scale * g1;
    omega.max(top)
}

pub fn estimate_extreme_value(
    cert: &BarrierCertificate,
    pairs: &[SamplePair],
    config: &LipschitzConfig,
) -> Result<LipschitzEstimate> {
    let needed = config.batches.saturating_mul(config.batch_size);
    if config.batches < 3 || config.batch_size == 0 {
        return Err(Error::InvalidInput(
            "extreme-value fit needs >= 3 batches of >= 1 slope".into(),
        ));
    }
    let n = pairs.len();
    let available = n.saturating_sub(1).saturating_mul(config.neighbour_span.max(1));
    if n < 2 || available < needed {
        return Err(Error::DegenerateData(format!(
            "extreme-value fit needs {needed} slopes, data supports {available}"
        )));
    }
    let vals = values(cert, pairs);
    let order = sorted_order(pairs);
    let span = config.neighbour_span.max(1);
    let batches: Vec<(f64, f64, usize)> = (0..config.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(b as u64);
            let (mut m1, mut m2, mut used) = (0.0f64, 0.0f64, 0usize);
            for _ in 0..config.batch_size {
                let i = rng.gen_range(0..n - 1);
                let j = (i + rng.gen_range(1..=span)).min(n - 1);
                if let Some((s1, s2)) = slope(pairs, &vals, order[i], order[j]) {
                    m1 = m1.max(s1);
                    m2 = m2.max(s2);
                    used += 1;
                }
            }
            (m1, m2, used)
        })
        .collect();
    let used: usize = batches.iter().map(|b| b.2).sum();
    if used == 0 {
        return Err(Error::DegenerateData("all sampled states coincide".into()));
    }
    let maxima1: Vec<f64> = batches.iter().map(|b| b.0).collect();
    let maxima2: Vec<f64> = batches.iter().map(|b| b.1).collect();
    let observed_l1 = maxima1.iter().cloned().fold(0.0, f64::max);
    let observed_l2 = maxima2.iter().cloned().fold(0.0, f64::max);
    let l1 = reverse_weibull_location(&maxima1);
    let l2 = reverse_weibull_location(&maxima2);
    Ok(LipschitzEstimate {
        l1,
        l2,
        l: l1.max(l2),
        method: LipschitzMethod::ExtremeValue,
        samples_used: used,
        safety_multiplier: 1.0,
        observed_l1,
        observed_l2,
    })
}

pub fn estimate(
    cert: &BarrierCertificate,
    pairs: &[SamplePair],
    config: &LipschitzConfig,
) -> Result<LipschitzEstimate> {
    match config.method {
        LipschitzMethod::PairwiseMax => estimate_pairwise(cert, pairs, config),
        LipschitzMethod::ExtremeValue => estimate_extreme_value(cert, pairs, config),
    }
}

//! Physics-informed sample selection: keep a pair only when the physics
//! model predicts its recorded successor to within `delta`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::SystemModel;
use crate::sampling::{Dataset, SamplePair};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    delta: f64,
}

impl FilterConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "filter threshold must be finite and > 0, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

#[derive(Clone, Debug)]
pub struct FilterOutcome {
    pub retained: Dataset,
    pub retained_count: usize,
    pub discarded_count: usize,
    /// One entry per input pair, in input order.
    pub discrepancies: Vec<f64>,
    pub delta: f64,
}

impl FilterOutcome {
    pub fn input_count(&self) -> usize {
        self.retained_count + self.discarded_count
    }

    pub fn retention(&self) -> f64 {
        self.retained_count as f64 / self.input_count() as f64
    }
}

/// Widest stretch of discarded samples, measured along the state ordering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpInterval {
    /// Retained state just before the run, or the run's first state at the domain edge.
    pub from: Vec<f64>,
    /// Retained state just after the run, or the run's last state at the domain edge.
    pub to: Vec<f64>,
    pub discarded: usize,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub samples: usize,
    pub retained: usize,
    pub discarded: usize,
    pub delta: f64,
    pub retention: f64,
    pub max_jump: Option<JumpInterval>,
}

#[derive(Clone, Debug)]
pub struct DiscrepancyProfile {
    /// `(state, discrepancy)` in input order.
    pub entries: Vec<(Vec<f64>, f64)>,
    pub max_jump: Option<JumpInterval>,
}

fn check_dims(dataset: &Dataset, physics: &SystemModel) -> Result<()> {
    if dataset.dim() != physics.dim() {
        return Err(Error::ModelMismatch(format!(
            "dataset has dimension {}, physics model {}",
            dataset.dim(),
            physics.dim()
        )));
    }
    Ok(())
}

fn discrepancy(pair: &SamplePair, physics: &SystemModel) -> Result<f64> {
    let predicted = physics.step(&pair.state)?;
    Ok(predicted
        .iter()
        .zip(&pair.successor)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

fn discrepancies(dataset: &Dataset, physics: &SystemModel) -> Result<Vec<f64>> {
    check_dims(dataset, physics)?;
    dataset.pairs.par_iter().map(|p| discrepancy(p, physics)).collect()
}

pub fn apply_filter(dataset: &Dataset, physics: &SystemModel, config: &FilterConfig) -> Result<FilterOutcome> {
    let discrepancies = discrepancies(dataset, physics)?;
    let pairs: Vec<SamplePair> = dataset
        .pairs
        .iter()
        .zip(&discrepancies)
        .filter(|(_, d)| **d <= config.delta)
        .map(|(p, _)| p.clone())
        .collect();
    let retained_count = pairs.len();
    let mut retained = dataset.with_pairs(pairs);
    retained.filtered = true;
    Ok(FilterOutcome {
        retained,
        retained_count,
        discarded_count: dataset.len() - retained_count,
        discrepancies,
        delta: config.delta,
    })
}

pub fn discrepancy_profile(dataset: &Dataset, physics: &SystemModel, delta: f64) -> Result<DiscrepancyProfile> {
    let d = discrepancies(dataset, physics)?;
    let max_jump = max_jump(dataset, &d, delta);
    Ok(DiscrepancyProfile {
        entries: dataset.states().map(|s| s.to_vec()).zip(d).collect(),
        max_jump,
    })
}

/// Largest run of consecutive discarded samples after sorting states
/// lexicographically. Ties go to the run that starts first.
pub fn max_jump(dataset: &Dataset, discrepancies: &[f64], delta: f64) -> Option<JumpInterval> {
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&dataset.pairs[i].state, &dataset.pairs[j].state);
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let state = |k: usize| &dataset.pairs[order[k]].state;
    let mut best: Option<JumpInterval> = None;
    let mut k = 0;
    while k < order.len() {
        if discrepancies[order[k]] <= delta {
            k += 1;
            continue;
        }
        let start = k;
        while k < order.len() && discrepancies[order[k]] > delta {
            k += 1;
        }
        let from = if start > 0 { state(start - 1) } else { state(start) };
        let to = if k < order.len() { state(k) } else { state(k - 1) };
        let width = from.iter().zip(to).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if best.as_ref().is_none_or(|b| width > b.width) {
            best = Some(JumpInterval {
                from: from.clone(),
                to: to.clone(),
                discarded: k - start,
                width,
            });
        }
    }
    best
}

impl FilterOutcome {
    pub fn summary(&self, input: &Dataset) -> FilterSummary {
        FilterSummary {
            samples: self.input_count(),
            retained: self.retained_count,
            discarded: self.discarded_count,
            delta: self.delta,
            retention: self.retention(),
            max_jump: max_jump(input, &self.discrepancies, self.delta),
        }
    }
}

//! Side-by-side comparison of the eight built-in experiments with published
//! reference values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::run::run_pipeline;
use crate::certify::{GuaranteeMode, Verdict};
use crate::error::Result;
use crate::models::Preset;

/// Relative difference above which a value is flagged.
pub const FLAG_RELATIVE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    Traditional,
    PhysicsInformed,
}

impl Approach {
    pub fn name(self) -> &'static str {
        match self {
            Approach::Traditional => "traditional",
            Approach::PhysicsInformed => "physics-informed",
        }
    }

    pub fn filtered(self) -> bool {
        self == Approach::PhysicsInformed
    }
}

/// Published values for one row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub preset: Preset,
    pub mode: GuaranteeMode,
    pub approach: Approach,
    pub samples: usize,
    pub delta: Option<f64>,
    pub eps_max: Option<f64>,
    pub phi: Option<f64>,
    pub lipschitz: f64,
    pub eta: f64,
    pub condition: f64,
    /// Printed percent changes, physics-informed rows only.
    pub pct_eta: Option<f64>,
    pub pct_condition: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
const fn row(
    preset: Preset,
    mode: GuaranteeMode,
    approach: Approach,
    samples: usize,
    level: (Option<f64>, Option<f64>),
    lipschitz: f64,
    eta: f64,
    condition: f64,
    pct: (Option<f64>, Option<f64>),
) -> ReferenceRow {
    let delta = match approach {
        Approach::Traditional => None,
        Approach::PhysicsInformed => Some(0.005),
    };
    ReferenceRow {
        preset,
        mode,
        approach,
        samples,
        delta,
        eps_max: level.0,
        phi: level.1,
        lipschitz,
        eta,
        condition,
        pct_eta: pct.0,
        pct_condition: pct.1,
    }
}

use Approach::{PhysicsInformed as Phy, Traditional as Trad};
use GuaranteeMode::{Deterministic as Det, Probabilistic as Prob};
use Preset::{LogisticGrowth as Lg, SupplyDemand as Sd};

pub const REFERENCE: [ReferenceRow; 8] = [
    row(
        Sd,
        Det,
        Trad,
        220_000,
        (Some(5e-6), None),
        67.90,
        -0.0235,
        -0.0231,
        (None, None),
    ),
    row(
        Sd,
        Det,
        Phy,
        110_228,
        (Some(9e-5), None),
        103.72,
        -0.0527,
        -0.0434,
        (Some(-124.0), Some(-87.0)),
    ),
    row(
        Sd,
        Prob,
        Trad,
        300_000,
        (None, Some(3.1e-5)),
        11.51,
        -0.2078,
        -0.2070,
        (None, None),
    ),
    row(
        Sd,
        Prob,
        Phy,
        150_260,
        (None, Some(6.18e-5)),
        11.51,
        -0.2094,
        -0.2078,
        (Some(-0.74), Some(-0.36)),
    ),
    row(
        Lg,
        Det,
        Trad,
        90_000,
        (Some(5e-6), None),
        25.25,
        -0.0065,
        -0.0064,
        (None, None),
    ),
    row(
        Lg,
        Det,
        Phy,
        45_175,
        (Some(8e-5), None),
        222.87,
        -0.0694,
        -0.0515,
        (Some(-967.0), Some(-704.0)),
    ),
    row(
        Lg,
        Prob,
        Trad,
        260_000,
        (None, Some(4.05e-5)),
        2.9479,
        -6.4189e-4,
        -5.3444e-4,
        (None, None),
    ),
    row(
        Lg,
        Prob,
        Phy,
        130_234,
        (None, Some(8.08e-5)),
        5.0397,
        -0.0021,
        -0.0017,
        (Some(-221.0), Some(-217.0)),
    ),
];

/// `(new - old) / |old|` in percent.
pub fn percent_change(old: f64, new: f64) -> f64 {
    (new - old) / old.abs() * 100.0
}

/// Values produced by one of our runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub samples: usize,
    pub eps_max: Option<f64>,
    pub phi: Option<f64>,
    pub lipschitz: f64,
    pub eta: f64,
    pub condition: f64,
    pub verdict: Verdict,
    pub empirical_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub reference: ReferenceRow,
    pub measured: Option<Measured>,
    pub error: Option<String>,
    pub pct_eta: Option<f64>,
    pub pct_condition: Option<f64>,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
}

pub fn reference_config(r: &ReferenceRow, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::preset(r.preset, r.mode, r.approach.filtered());
    cfg.seed = seed;
    cfg
}

fn relative(ours: f64, theirs: f64) -> f64 {
    (ours - theirs).abs() / theirs.abs().max(f64::MIN_POSITIVE)
}

fn flags_for(reference: &ReferenceRow, m: &Measured) -> Vec<String> {
    let mut flags = Vec::new();
    let mut check = |name: &str, ours: f64, theirs: f64| {
        if relative(ours, theirs) > FLAG_RELATIVE {
            flags.push(format!("{name}: {ours:.4e} vs {theirs:.4e}"));
        }
    };
    check("samples", m.samples as f64, reference.samples as f64);
    if let (Some(a), Some(b)) = (m.eps_max, reference.eps_max) {
        check("eps_max", a, b);
    }
    if let (Some(a), Some(b)) = (m.phi, reference.phi) {
        check("phi", a, b);
    }
    check("lipschitz", m.lipschitz, reference.lipschitz);
    check("eta", m.eta, reference.eta);
    check("condition", m.condition, reference.condition);
    if m.verdict != Verdict::Pass {
        flags.push("verdict: fail vs pass".into());
    }
    if m.empirical_violations > 0 {
        flags.push(format!("empirical violations: {}", m.empirical_violations));
    }
    flags
}

/// Runs all eight experiments with `seed`; rows never abort the table.
pub fn reproduce(seed: u64) -> Reproduction {
    let measured: Vec<std::result::Result<Measured, String>> = REFERENCE
        .par_iter()
        .map(|r| {
            let outcome = run_pipeline(&reference_config(r, seed)).map_err(|e| e.to_string())?;
            let rep = outcome.report;
            Ok(Measured {
                samples: rep.retained,
                eps_max: rep.certification.eps_max,
                phi: rep.certification.phi,
                lipschitz: rep.certification.lipschitz,
                eta: rep.certification.eta,
                condition: rep.certification.condition_value,
                verdict: rep.certification.verdict,
                empirical_violations: rep.safety.violations,
            })
        })
        .collect();

    let mut rows: Vec<ComparisonRow> = REFERENCE
        .iter()
        .zip(measured)
        .map(|(r, m)| match m {
            Ok(m) => ComparisonRow {
                reference: *r,
                flags: flags_for(r, &m),
                measured: Some(m),
                error: None,
                pct_eta: None,
                pct_condition: None,
            },
            Err(e) => ComparisonRow {
                reference: *r,
                measured: None,
                flags: vec![format!("error: {e}")],
                error: Some(e),
                pct_eta: None,
                pct_condition: None,
            },
        })
        .collect();

    for pair in rows.chunks_mut(2) {
        let (trad, phy) = pair.split_at_mut(1);
        if let (Some(t), Some(p)) = (&trad[0].measured, &phy[0].measured) {
            phy[0].pct_eta = Some(percent_change(t.eta, p.eta));
            phy[0].pct_condition = Some(percent_change(t.condition, p.condition));
        }
    }
    Reproduction { seed, rows }
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |x| format!("{x:.4e}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |x| format!("{x:.1}%"))
}

impl Reproduction {
    /// Fixed-width text table, one `ours` and one `ref` line per row.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<15} {:<13} {:<16} {:<4} {:>8} {:>7} {:>11} {:>11} {:>10} {:>12} {:>9} {:>12} {:>9}",
            "case",
            "guarantee",
            "approach",
            "src",
            "samples",
            "delta",
            "eps_max",
            "phi",
            "L",
            "eta",
            "%eta",
            "condition",
            "%cond"
        );
        for r in &self.rows {
            let f = &r.reference;
            let lead = format!(
                "{:<15} {:<13} {:<16}",
                f.preset.name(),
                f.mode.name(),
                f.approach.name()
            );
            match &r.measured {
                Some(m) => {
                    let _ = writeln!(
                        s,
                        "{lead} {:<4} {:>8} {:>7} {:>11} {:>11} {:>10.4} {:>12.4e} {:>9} {:>12.4e} {:>9}",
                        "ours",
                        m.samples,
                        f.delta.map_or("-".into(), |d| d.to_string()),
                        opt(m.eps_max),
                        opt(m.phi),
                        m.lipschitz,
                        m.eta,
                        pct(r.pct_eta),
                        m.condition,
                        pct(r.pct_condition),
                    );
                }
                None => {
                    let _ = writeln!(s, "{lead} {:<4} error: {}", "ours", r.error.as_deref().unwrap_or(""));
                }
            }
            let _ = writeln!(
                s,
                "{:<46} {:<4} {:>8} {:>7} {:>11} {:>11} {:>10.4} {:>12.4e} {:>9} {:>12.4e} {:>9}",
                "",
                "ref",
                f.samples,
                f.delta.map_or("-".into(), |d| d.to_string()),
                opt(f.eps_max),
                opt(f.phi),
                f.lipschitz,
                f.eta,
                pct(f.pct_eta),
                f.condition,
                pct(f.pct_condition),
            );
            for flag in &r.flags {
                let _ = writeln!(s, "{:<46} ! {flag}", "");
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "case",
            "guarantee",
            "approach",
            "source",
            "samples",
            "delta",
            "eps_max",
            "phi",
            "lipschitz",
            "eta",
            "pct_eta",
            "condition",
            "pct_condition",
            "verdict",
            "flags",
        ])?;
        let o = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            let f = &r.reference;
            let head = [f.preset.name(), f.mode.name(), f.approach.name()];
            if let Some(m) = &r.measured {
                w.write_record(head.iter().map(|s| s.to_string()).chain([
                    "ours".into(),
                    m.samples.to_string(),
                    o(f.delta),
                    o(m.eps_max),
                    o(m.phi),
                    m.lipschitz.to_string(),
                    m.eta.to_string(),
                    o(r.pct_eta),
                    m.condition.to_string(),
                    o(r.pct_condition),
                    format!("{:?}", m.verdict).to_lowercase(),
                    r.flags.join("; "),
                ]))?;
            } else {
                w.write_record(
                    head.iter().map(|s| s.to_string()).chain(
                        ["ours".into()]
                            .into_iter()
                            .chain(std::iter::repeat_n(String::new(), 9))
                            .chain(["error".into(), r.flags.join("; ")]),
                    ),
                )?;
            }
            w.write_record(head.iter().map(|s| s.to_string()).chain([
                "ref".into(),
                f.samples.to_string(),
                o(f.delta),
                o(f.eps_max),
                o(f.phi),
                f.lipschitz.to_string(),
                f.eta.to_string(),
                o(f.pct_eta),
                f.condition.to_string(),
                o(f.pct_condition),
                "pass".into(),
                String::new(),
            ]))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `reproduction.txt`, `reproduction.csv` and `reproduction.json`.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let txt = dir.join("reproduction.txt");
        fs::write(&txt, self.to_text())?;
        let csv = dir.join("reproduction.csv");
        self.write_csv(&csv)?;
        let json = dir.join("reproduction.json");
        fs::write(&json, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(vec![txt, csv, json])
    }
}

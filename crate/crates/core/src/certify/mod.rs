//! Deterministic (covering radius) and probabilistic (scenario bound) checks
//! that turn a solved scenario program into a certificate verdict.

pub mod beta;

use serde::{Deserialize, Serialize};

pub use beta::{beta_inc, beta_inc_inv, ln_beta, ln_gamma};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuaranteeMode {
    Deterministic,
    Probabilistic,
}

impl GuaranteeMode {
    pub fn name(self) -> &'static str {
        match self {
            GuaranteeMode::Deterministic => "deterministic",
            GuaranteeMode::Probabilistic => "probabilistic",
        }
    }
}

impl std::str::FromStr for GuaranteeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(Self::Deterministic),
            "probabilistic" => Ok(Self::Probabilistic),
            _ => Err(Error::Config(format!("unknown guarantee mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Probability mass of a ball of radius `r` under uniform sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum GeometryFactor {
    /// `mu(r) = sqrt(pi) / (1.77 a) * r`.
    Interval { a: f64 },
    /// `mu(r) = pi r^2 / (4 a b)`.
    Rectangle { a: f64, b: f64 },
}

impl GeometryFactor {
    pub fn interval(a: f64) -> Result<Self> {
        check_extent(a)?;
        Ok(Self::Interval { a })
    }

    pub fn rectangle(a: f64, b: f64) -> Result<Self> {
        check_extent(a)?;
        check_extent(b)?;
        Ok(Self::Rectangle { a, b })
    }

    /// From the extents of the state set; only dimensions 1 and 2 are supported.
    pub fn from_extents(extents: &[f64]) -> Result<Self> {
        match extents {
            [a] => Self::interval(*a),
            [a, b] => Self::rectangle(*a, *b),
            _ => Err(Error::InvalidInput(format!(
                "geometry factor is defined for dimensions 1 and 2, got {}",
                extents.len()
            ))),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            GeometryFactor::Interval { .. } => 1,
            GeometryFactor::Rectangle { .. } => 2,
        }
    }

    /// Slope of the 1-D factor, `mu(r) = coefficient * r`.
    pub fn coefficient(&self) -> Option<f64> {
        match self {
            GeometryFactor::Interval { a } => Some(std::f64::consts::PI.sqrt() / (1.77 * a)),
            GeometryFactor::Rectangle { .. } => None,
        }
    }

    pub fn mu(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        let v = match self {
            GeometryFactor::Interval { .. } => self.coefficient().unwrap_or(0.0) * r,
            GeometryFactor::Rectangle { a, b } => std::f64::consts::PI * r * r / (4.0 * a * b),
        };
        v.min(1.0)
    }

    pub fn mu_inv(&self, phi: f64) -> Result<f64> {
        if phi >= 1.0 {
            return Err(Error::GeometrySaturation(phi));
        }
        if !(phi >= 0.0) {
            return Err(Error::Domain(format!("violation level must be >= 0, got {phi}")));
        }
        Ok(match self {
            GeometryFactor::Interval { .. } => phi / self.coefficient().unwrap_or(1.0),
            GeometryFactor::Rectangle { a, b } => (4.0 * a * b * phi / std::f64::consts::PI).sqrt(),
        })
    }
}

fn check_extent(a: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidInput(format!("extent must be finite and > 0, got {a}")));
    }
    Ok(())
}

/// `phi = I^{-1}(1 - beta; c, P - c + 1)`.
pub fn min_violation_level(beta: f64, c: usize, retained: usize) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    if c == 0 {
        return Err(Error::Domain("decision-variable count c must be >= 1".into()));
    }
    if retained <= c {
        return Err(Error::InsufficientSamples {
            retained,
            decision_vars: c,
        });
    }
    beta_inc_inv(1.0 - beta, c as f64, (retained - c + 1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub mode: GuaranteeMode,
    pub eta: f64,
    pub lipschitz: f64,
    pub eps_max: Option<f64>,
    pub phi: Option<f64>,
    pub mu_inv_phi: Option<f64>,
    pub geometry: Option<GeometryFactor>,
    /// Decision-variable count used for `phi`.
    pub c: Option<usize>,
    pub retained: Option<usize>,
    pub beta: Option<f64>,
    /// `eta + L eps_max` or `eta + L mu^{-1}(phi)`; also the upper bound on
    /// the robust program's optimum.
    pub condition_value: f64,
    pub verdict: Verdict,
    pub confidence: f64,
    pub slater_constant: f64,
}

impl CertificationReport {
    /// Recomputes the condition and verdict from the stored inputs.
    pub fn recheck(&self) -> Result<CertificationReport> {
        match self.mode {
            GuaranteeMode::Deterministic => {
                let eps = self
                    .eps_max
                    .ok_or_else(|| Error::InvalidInput("report lacks eps_max".into()))?;
                check_deterministic(self.eta, self.lipschitz, eps)
            }
            GuaranteeMode::Probabilistic => {
                let missing = || Error::InvalidInput("report lacks probabilistic inputs".into());
                let mut r = check_probabilistic(
                    self.eta,
                    self.lipschitz,
                    self.phi.ok_or_else(missing)?,
                    &self.geometry.ok_or_else(missing)?,
                    self.beta.ok_or_else(missing)?,
                )?;
                r.c = self.c;
                r.retained = self.retained;
                Ok(r)
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn verdict(value: f64) -> Verdict {
    if value <= 0.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

pub fn check_deterministic(eta: f64, lipschitz: f64, eps_max: f64) -> Result<CertificationReport> {
    if !(eps_max > 0.0 && eps_max.is_finite()) {
        return Err(Error::Domain(format!("eps_max must be finite and > 0, got {eps_max}")));
    }
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(Error::Domain(format!(
            "Lipschitz constant must be finite and >= 0, got {lipschitz}"
        )));
    }
    let condition_value = lipschitz * eps_max + eta;
    Ok(CertificationReport {
        mode: GuaranteeMode::Deterministic,
        eta,
        lipschitz,
        eps_max: Some(eps_max),
        phi: None,
        mu_inv_phi: None,
        geometry: None,
        c: None,
        retained: None,
        beta: None,
        condition_value,
        verdict: verdict(condition_value),
        confidence: 1.0,
        slater_constant: 1.0,
    })
}

pub fn check_probabilistic(
    eta: f64,
    lipschitz: f64,
    phi: f64,
    geometry: &GeometryFactor,
    beta: f64,
) -> Result<CertificationReport> {
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(Error::Domain(format!(
            "Lipschitz constant must be finite and >= 0, got {lipschitz}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    let r = geometry.mu_inv(phi)?;
    let condition_value = eta + lipschitz * r;
    Ok(CertificationReport {
        mode: GuaranteeMode::Probabilistic,
        eta,
        lipschitz,
        eps_max: None,
        phi: Some(phi),
        mu_inv_phi: Some(r),
        geometry: Some(*geometry),
        c: None,
        retained: None,
        beta: Some(beta),
        condition_value,
        verdict: verdict(condition_value),
        confidence: 1.0 - beta,
        slater_constant: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interval_coefficients() {
        let sd = GeometryFactor::interval(2.2).unwrap().coefficient().unwrap();
        let lg = GeometryFactor::interval(0.9).unwrap().coefficient().unwrap();
        assert!((sd - 0.4552).abs() < 1e-4, "{sd}");
        assert!((lg - 1.1127).abs() < 1e-4, "{lg}");
    }

    #[test]
    fn printed_deterministic_rows() {
        let r = check_deterministic(-0.0527, 103.72, 9e-5).unwrap();
        assert!((r.condition_value - (-0.0434)).abs() < 5e-5);
        assert!(r.passed());
        assert_eq!(r.confidence, 1.0);
        let r = check_deterministic(-0.0694, 222.87, 8e-5).unwrap();
        assert!((r.condition_value - (-0.0516)).abs() < 5e-5);
        assert!(!check_deterministic(0.01, 0.0, 1e-3).unwrap().passed());
        assert!(check_deterministic(-1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn printed_probabilistic_rows() {
        let g = GeometryFactor::interval(2.2).unwrap();
        let r = check_probabilistic(-0.2094, 11.51, 6.18e-5, &g, 0.05).unwrap();
        assert!((r.condition_value - (-0.2078)).abs() < 5e-5);
        assert!((r.confidence - 0.95).abs() < 1e-15);
        let g = GeometryFactor::interval(0.9).unwrap();
        let r = check_probabilistic(-0.0021, 5.0397, 8.08e-5, &g, 0.05).unwrap();
        assert!((r.condition_value - (-0.0017)).abs() < 5e-5);
        let r = check_probabilistic(-0.3, 7.0, 0.0, &g, 0.05).unwrap();
        assert_eq!(r.condition_value, -0.3);
    }

    #[test]
    fn saturation_is_an_error() {
        let g = GeometryFactor::interval(1.0).unwrap();
        assert!(matches!(g.mu_inv(1.0), Err(Error::GeometrySaturation(_))));
        assert!(matches!(
            check_probabilistic(-1.0, 1.0, 1.2, &g, 0.05),
            Err(Error::GeometrySaturation(_))
        ));
        assert_eq!(g.mu(1e9), 1.0);
    }

    #[test]
    fn violation_level_values() {
        let phi = min_violation_level(0.05, 6, 130_234).unwrap();
        assert!((phi - 8.08e-5).abs() < 2e-7, "{phi}");
        let phi = min_violation_level(0.05, 6, 150_260).unwrap();
        assert!((phi - 7.0e-5).abs() < 1e-6, "{phi}");
        let phi = min_violation_level(0.05, 5, 150_260).unwrap();
        assert!((phi - 6.09e-5).abs() < 1e-7, "{phi}");
        assert!(min_violation_level(0.999_999, 6, 1000).unwrap() < 1e-3);
        assert!(matches!(
            min_violation_level(0.05, 6, 6),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn recheck_reproduces_verdict() {
        let g = GeometryFactor::interval(0.9).unwrap();
        let r = check_probabilistic(-0.0021, 5.0397, 8.08e-5, &g, 0.05).unwrap();
        assert_eq!(r.recheck().unwrap(), r);
        let d = check_deterministic(-0.0235, 67.9, 5e-6).unwrap();
        assert_eq!(d.recheck().unwrap(), d);
    }

    proptest! {
        #[test]
        fn mu_round_trip(r in 0.0f64..0.5, a in 0.5f64..3.0, b in 0.5f64..3.0) {
            for g in [GeometryFactor::interval(a).unwrap(), GeometryFactor::rectangle(a, b).unwrap()] {
                let m = g.mu(r);
                prop_assume!(m < 1.0);
                prop_assert!((g.mu_inv(m).unwrap() - r).abs() <= 1e-12 * (1.0 + r));
            }
        }

        #[test]
        fn conditions_are_monotone(
            eta in -1.0f64..0.1, l in 0.0f64..200.0, e in 1e-6f64..1e-3, phi in 0.0f64..1e-3,
            bump in 0.0f64..0.1,
        ) {
            let d0 = check_deterministic(eta, l, e).unwrap().condition_value;
            for d1 in [
                check_deterministic(eta + bump, l, e).unwrap().condition_value,
                check_deterministic(eta, l + bump, e).unwrap().condition_value,
                check_deterministic(eta, l, e + bump * 1e-3).unwrap().condition_value,
            ] {
                prop_assert!(d1 >= d0);
            }
            let g = GeometryFactor::interval(1.0).unwrap();
            let p0 = check_probabilistic(eta, l, phi, &g, 0.05).unwrap().condition_value;
            let p1 = check_probabilistic(eta, l, phi + bump * 1e-3, &g, 0.05).unwrap().condition_value;
            prop_assert!(p1 >= p0);
        }
    }

    #[test]
    fn violation_level_monotonicity_grid() {
        for c in [1usize, 3, 6, 10] {
            let mut prev = f64::INFINITY;
            for p in [50usize, 200, 1_000, 10_000, 100_000] {
                let phi = min_violation_level(0.05, c, p).unwrap();
                assert!(phi < prev);
                prev = phi;
                let more_c = min_violation_level(0.05, c + 1, p).unwrap();
                assert!(more_c > phi);
                let more_conf = min_violation_level(0.01, c, p).unwrap();
                assert!(more_conf > phi);
            }
        }
    }
}

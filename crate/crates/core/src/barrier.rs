//! Monomial barrier templates and the linear constraint system of the
//! scenario program.
//!
//! Decision variables are laid out as `[alpha, rho, q_1 .. q_z]`; the slack
//! `eta` is kept implicit with coefficient `-1` in every row, so a row reads
//! `coeffs . d + offset - eta <= 0`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::GuaranteeMode;
use crate::error::{Error, Result};
use crate::models::RegionBox;
use crate::sampling::SamplePair;

pub const DEFAULT_KAPPA: f64 = 0.83;
pub const DEFAULT_Q_MAX: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierTemplate {
    exponents: Vec<Vec<u32>>,
}

impl BarrierTemplate {
    pub fn new(exponents: Vec<Vec<u32>>) -> Result<Self> {
        let dim = exponents.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidInput(
                "template needs at least one monomial of dimension >= 1".into(),
            ));
        }
        if exponents.iter().any(|e| e.len() != dim) {
            return Err(Error::InvalidInput("monomials have mixed dimensions".into()));
        }
        for (i, e) in exponents.iter().enumerate() {
            if exponents[..i].contains(e) {
                return Err(Error::InvalidInput(format!("duplicate monomial {e:?}")));
            }
        }
        Ok(Self { exponents })
    }

    /// `(x^2, x, 1)`.
    pub fn quadratic_1d() -> Self {
        Self {
            exponents: vec![vec![2], vec![1], vec![0]],
        }
    }

    /// Every monomial of total degree `<= degree`, highest degree first.
    pub fn full(dim: usize, degree: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("template dimension must be >= 1".into()));
        }
        let mut out = Vec::new();
        for total in (0..=degree).rev() {
            let mut e = vec![0u32; dim];
            compositions(total, 0, &mut e, &mut out);
        }
        Self::new(out)
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents[0].len()
    }

    /// Basis size `z`.
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn basis_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.exponents) {
            *o = e.iter().zip(x).map(|(p, v)| v.powi(*p as i32)).product();
        }
    }

    pub fn basis(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.basis_into(x, &mut out);
        out
    }

    pub fn evaluate(&self, q: &[f64], x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(q)
            .map(|(e, c)| c * e.iter().zip(x).map(|(p, v)| v.powi(*p as i32)).product::<f64>())
            .sum()
    }
}

fn compositions(left: u32, axis: usize, e: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if axis + 1 == e.len() {
        e[axis] = left;
        out.push(e.clone());
        return;
    }
    for k in (0..=left).rev() {
        e[axis] = k;
        compositions(left - k, axis + 1, e, out);
    }
}

/// `B(q, x) = sum_j q_j l_j(x)`.
pub fn evaluate(template: &BarrierTemplate, q: &[f64], x: &[f64]) -> Result<f64> {
    if q.len() != template.len() {
        return Err(Error::DimensionMismatch {
            expected: template.len(),
            got: q.len(),
        });
    }
    if x.len() != template.dim() {
        return Err(Error::DimensionMismatch {
            expected: template.dim(),
            got: x.len(),
        });
    }
    Ok(template.evaluate(q, x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_hash: String,
    pub delta: Option<f64>,
    pub mode: GuaranteeMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierCertificate {
    pub template: BarrierTemplate,
    pub q: Vec<f64>,
    pub kappa: f64,
    pub alpha: f64,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl BarrierCertificate {
    pub fn new(template: BarrierTemplate, q: Vec<f64>, kappa: f64, alpha: f64, rho: f64) -> Result<Self> {
        let c = Self {
            template,
            q,
            kappa,
            alpha,
            rho,
            provenance: None,
        };
        c.validate()?;
        Ok(c)
    }

    /// Reads `[alpha, rho, q..]` as laid out in a [`ConstraintSystem`].
    pub fn from_decision(template: BarrierTemplate, kappa: f64, decision: &[f64]) -> Result<Self> {
        if decision.len() != template.len() + 2 {
            return Err(Error::DimensionMismatch {
                expected: template.len() + 2,
                got: decision.len(),
            });
        }
        Self::new(template, decision[2..].to_vec(), kappa, decision[0], decision[1])
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.len() != self.template.len() {
            return Err(Error::DimensionMismatch {
                expected: self.template.len(),
                got: self.q.len(),
            });
        }
        validate_kappa(self.kappa)?;
        if !(self.rho > self.alpha) {
            return Err(Error::InvalidInput(format!(
                "need rho > alpha, got alpha = {}, rho = {}",
                self.alpha, self.rho
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.template.evaluate(&self.q, x)
    }

    /// `B(y) - kappa B(x)`.
    pub fn flow_value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.value(y) - self.kappa * self.value(x)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Self = serde_json::from_reader(File::open(path)?)?;
        Ok(c)
    }
}

fn validate_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidInput(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowTag {
    Initial,
    Unsafe,
    Flow,
    /// `alpha - rho <= eta` or `-rho <= eta`.
    Level,
    Auxiliary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    nvars: usize,
    coeffs: Vec<f64>,
    offsets: Vec<f64>,
    tags: Vec<RowTag>,
    bounds: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl ConstraintSystem {
    /// Rows `coeffs[i] . d + offsets[i] - eta <= 0` with `lower <= d <= upper`.
    pub fn raw(
        nvars: usize,
        coeffs: Vec<f64>,
        offsets: Vec<f64>,
        tags: Vec<RowTag>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if nvars == 0 {
            return Err(Error::InvalidInput("need at least one decision variable".into()));
        }
        if coeffs.len() != nvars * offsets.len() || tags.len() != offsets.len() {
            return Err(Error::InvalidInput("row storage sizes disagree".into()));
        }
        if bounds.len() != nvars {
            return Err(Error::DimensionMismatch {
                expected: nvars,
                got: bounds.len(),
            });
        }
        if bounds.iter().any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
            return Err(Error::InvalidInput("variable bounds need lower <= upper".into()));
        }
        if coeffs.iter().chain(&offsets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("row data must be finite".into()));
        }
        Ok(Self {
            nvars,
            coeffs,
            offsets,
            tags,
            bounds,
            warnings: Vec::new(),
        })
    }

    /// Number of decision variables, excluding `eta`.
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn row(&self, i: usize) -> (&[f64], f64) {
        (&self.coeffs[i * self.nvars..(i + 1) * self.nvars], self.offsets[i])
    }

    pub fn tag(&self, i: usize) -> RowTag {
        self.tags[i]
    }

    pub fn tags(&self) -> &[RowTag] {
        &self.tags
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn count(&self, tag: RowTag) -> usize {
        self.tags.iter().filter(|t| **t == tag).count()
    }

    /// `coeffs . d + offset` for row `i`.
    pub fn row_value(&self, i: usize, d: &[f64]) -> f64 {
        let (a, b) = self.row(i);
        a.iter().zip(d).map(|(u, v)| u * v).sum::<f64>() + b
    }

    /// Largest row value at `d`: the smallest feasible `eta` for that `d`.
    pub fn max_row_value(&self, d: &[f64]) -> f64 {
        (0..self.len())
            .into_par_iter()
            .map(|i| self.row_value(i, d))
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }

    /// Appends rows from another system with the same layout.
    pub fn extend(&mut self, other: &ConstraintSystem) -> Result<()> {
        if other.nvars != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: other.nvars,
            });
        }
        self.coeffs.extend_from_slice(&other.coeffs);
        self.offsets.extend_from_slice(&other.offsets);
        self.tags.extend_from_slice(&other.tags);
        Ok(())
    }

    /// Multiplies every row by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.coeffs.iter_mut().for_each(|v| *v *= factor);
        s.offsets.iter_mut().for_each(|v| *v *= factor);
        s
    }
}

#[derive(Clone, Debug)]
pub struct Regions<'a> {
    pub state_set: &'a RegionBox,
    pub initial_set: &'a RegionBox,
    pub unsafe_set: &'a RegionBox,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssembleOptions {
    /// Box `|q_j| <= q_max`; `None` leaves the coefficients free.
    pub q_max: Option<f64>,
    /// Adds `alpha - rho <= eta` and `-rho <= eta`.
    pub level_rows: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self {
            q_max: Some(DEFAULT_Q_MAX),
            level_rows: true,
        }
    }
}

pub fn assemble(
    template: &BarrierTemplate,
    kappa: f64,
    pairs: &[SamplePair],
    initial_samples: &[Vec<f64>],
    unsafe_samples: &[Vec<f64>],
    regions: &Regions<'_>,
    options: &AssembleOptions,
) -> Result<ConstraintSystem> {
    validate_kappa(kappa)?;
    let z = template.len();
    let nvars = z + 2;
    for (what, region) in [
        ("state set", regions.state_set),
        ("initial set", regions.initial_set),
        ("unsafe set", regions.unsafe_set),
    ] {
        if region.dim() != template.dim() {
            return Err(Error::ModelMismatch(format!(
                "{what} has dimension {}, template {}",
                region.dim(),
                template.dim()
            )));
        }
    }
    if let Some(q) = options.q_max {
        if !(q > 0.0) {
            return Err(Error::InvalidInput(format!("q_max must be > 0, got {q}")));
        }
    }
    let locate = |what: &str, i: usize, x: &[f64], region: &RegionBox| -> Result<()> {
        if region.contains(x) {
            Ok(())
        } else {
            Err(Error::RegionViolation {
                row: format!("{what} row {i}"),
                detail: format!("{x:?} not in [{:?}, {:?}]", region.lower(), region.upper()),
            })
        }
    };

    let initial: Vec<Vec<f64>> = initial_samples
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            locate("initial", i, x, regions.initial_set)?;
            let mut row = vec![0.0; nvars];
            row[0] = -1.0;
            template.basis_into(x, &mut row[2..]);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let unsafe_rows: Vec<Vec<f64>> = unsafe_samples
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            locate("unsafe", i, x, regions.unsafe_set)?;
            let mut row = vec![0.0; nvars];
            row[1] = 1.0;
            template.basis_into(x, &mut row[2..]);
            row[2..].iter_mut().for_each(|v| *v = -*v);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let flow: Vec<Vec<f64>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            locate("flow", i, &p.state, regions.state_set)?;
            if p.successor.len() != template.dim() {
                return Err(Error::DimensionMismatch {
                    expected: template.dim(),
                    got: p.successor.len(),
                });
            }
            let mut row = vec![0.0; nvars];
            let lx = template.basis(&p.state);
            template.basis_into(&p.successor, &mut row[2..]);
            for (r, l) in row[2..].iter_mut().zip(&lx) {
                *r -= kappa * l;
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let mut level = Vec::new();
    if options.level_rows {
        let mut gap = vec![0.0; nvars];
        gap[0] = 1.0;
        gap[1] = -1.0;
        let mut nonneg = vec![0.0; nvars];
        nonneg[1] = -1.0;
        level.push(gap);
        level.push(nonneg);
    }

    let rows = initial.len() + unsafe_rows.len() + flow.len() + level.len();
    let mut coeffs = Vec::with_capacity(rows * nvars);
    let mut tags = Vec::with_capacity(rows);
    for (block, tag) in [
        (&initial, RowTag::Initial),
        (&unsafe_rows, RowTag::Unsafe),
        (&flow, RowTag::Flow),
        (&level, RowTag::Level),
    ] {
        for r in block {
            coeffs.extend_from_slice(r);
            tags.push(tag);
        }
    }
    let free = (f64::NEG_INFINITY, f64::INFINITY);
    let qb = options.q_max.map_or(free, |q| (-q, q));
    let mut bounds = vec![free, free];
    bounds.extend(std::iter::repeat_n(qb, z));
    let mut sys = ConstraintSystem::raw(nvars, coeffs, vec![0.0; rows], tags, bounds)?;
    if initial_samples.is_empty() {
        sys.warnings
            .push("no initial-set samples: the initial condition is vacuous".into());
    }
    if unsafe_samples.is_empty() {
        sys.warnings
            .push("no unsafe-set samples: the unsafe condition is vacuous".into());
    }
    if pairs.is_empty() {
        sys.warnings
            .push("no flow pairs: the decrease condition is vacuous".into());
    }
    for w in &sys.warnings {
        log::warn!("{w}");
    }
    Ok(sys)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max B(x) - alpha` over initial samples.
    pub initial: Option<f64>,
    /// `max rho - B(x)` over unsafe samples.
    pub unsafe_: Option<f64>,
    /// `max B(y) - kappa B(x)` over pairs.
    pub flow: Option<f64>,
    pub tolerance: f64,
    pub precondition_violations: Vec<String>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        [self.initial, self.unsafe_, self.flow]
            .into_iter()
            .flatten()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every residual `<= eta + tolerance` and no precondition violations.
    pub fn passes_at(&self, eta: f64) -> bool {
        self.precondition_violations.is_empty() && self.max_residual() <= eta + self.tolerance
    }
}

pub fn check_certificate(
    certificate: &BarrierCertificate,
    tolerance: f64,
    pairs: &[SamplePair],
    initial_samples: &[Vec<f64>],
    unsafe_samples: &[Vec<f64>],
) -> ResidualReport {
    let mut violations = Vec::new();
    if !(certificate.rho > certificate.alpha) {
        violations.push(format!(
            "rho = {} does not exceed alpha = {}",
            certificate.rho, certificate.alpha
        ));
    }
    if !(certificate.kappa > 0.0 && certificate.kappa <= 1.0) {
        violations.push(format!("kappa = {} outside (0, 1]", certificate.kappa));
    }
    let max_of = |it: Vec<f64>| it.into_iter().reduce(f64::max);
    let initial = max_of(
        initial_samples
            .par_iter()
            .map(|x| certificate.value(x) - certificate.alpha)
            .collect(),
    );
    let unsafe_ = max_of(
        unsafe_samples
            .par_iter()
            .map(|x| certificate.rho - certificate.value(x))
            .collect(),
    );
    let flow = max_of(
        pairs
            .par_iter()
            .map(|p| certificate.flow_value(&p.state, &p.successor))
            .collect(),
    );
    ResidualReport {
        initial,
        unsafe_,
        flow,
        tolerance,
        precondition_violations: violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SystemModel;
    use crate::sampling::sample_iid;
    use proptest::prelude::*;

    fn unit() -> RegionBox {
        RegionBox::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn evaluates_printed_polynomial() {
        let t = BarrierTemplate::quadratic_1d();
        let v = evaluate(&t, &[0.2, 0.8097, -15.5199], &[0.5]).unwrap();
        assert!((v - (-15.06505)).abs() < 1e-12, "{v}");
        assert_eq!(evaluate(&t, &[0.0; 3], &[1.7]).unwrap(), 0.0);
        let c = BarrierTemplate::new(vec![vec![0]]).unwrap();
        assert_eq!(evaluate(&c, &[4.5], &[-3.0]).unwrap(), 4.5);
        assert!(evaluate(&t, &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn full_template_counts_monomials() {
        let t = BarrierTemplate::full(1, 2).unwrap();
        assert_eq!(t, BarrierTemplate::quadratic_1d());
        let t = BarrierTemplate::full(2, 2).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t.exponents()[0], vec![2, 0]);
        assert_eq!(t.exponents()[5], vec![0, 0]);
        assert!(BarrierTemplate::new(vec![vec![1], vec![1]]).is_err());
    }

    #[test]
    fn single_pair_with_unit_kappa() {
        let t = BarrierTemplate::new(vec![vec![1], vec![0]]).unwrap();
        let pair = SamplePair {
            state: vec![0.25],
            successor: vec![0.75],
        };
        let regions = Regions {
            state_set: &unit(),
            initial_set: &unit(),
            unsafe_set: &unit(),
        };
        let opts = AssembleOptions {
            q_max: None,
            level_rows: false,
        };
        let sys = assemble(&t, 1.0, &[pair], &[], &[], &regions, &opts).unwrap();
        assert_eq!(sys.len(), 1);
        let (a, b) = sys.row(0);
        assert_eq!(a, &[0.0, 0.0, 0.5, 0.0]);
        assert_eq!(b, 0.0);
        assert_eq!(sys.warnings.len(), 2);
    }

    #[test]
    fn out_of_region_sample_names_its_row() {
        let t = BarrierTemplate::quadratic_1d();
        let x0 = RegionBox::interval(0.0, 0.2).unwrap();
        let regions = Regions {
            state_set: &unit(),
            initial_set: &x0,
            unsafe_set: &unit(),
        };
        let err = assemble(
            &t,
            0.83,
            &[],
            &[vec![0.1], vec![0.5]],
            &[],
            &regions,
            &AssembleOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::RegionViolation { row, .. } => assert_eq!(row, "initial row 1"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn residuals_for_zero_certificate() {
        let t = BarrierTemplate::quadratic_1d();
        let c = BarrierCertificate::new(t, vec![0.0; 3], 0.5, 0.0, 1.0).unwrap();
        let r = check_certificate(&c, 0.0, &[], &[], &[vec![0.3], vec![0.9]]);
        assert_eq!(r.unsafe_, Some(1.0));
        assert_eq!(r.initial, None);
        assert!(r.passes_at(1.0));
        assert!(!r.passes_at(0.5));
    }

    #[test]
    fn rho_not_above_alpha_is_flagged() {
        let t = BarrierTemplate::quadratic_1d();
        assert!(BarrierCertificate::new(t.clone(), vec![0.0; 3], 0.5, 1.0, 1.0).is_err());
        let c = BarrierCertificate {
            template: t,
            q: vec![0.0; 3],
            kappa: 0.5,
            alpha: 1.0,
            rho: 0.5,
            provenance: None,
        };
        let r = check_certificate(&c, 0.0, &[], &[vec![0.1]], &[]);
        assert_eq!(r.precondition_violations.len(), 1);
        assert!(!r.passes_at(10.0));
    }

    #[test]
    fn certificate_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cert.json");
        let c = BarrierCertificate::new(
            BarrierTemplate::quadratic_1d(),
            vec![0.2, 0.2, -1.4532],
            0.83,
            0.0001,
            0.2095,
        )
        .unwrap()
        .with_provenance(Provenance {
            dataset_hash: "ab".into(),
            delta: Some(0.005),
            mode: GuaranteeMode::Probabilistic,
        });
        c.save(&path).unwrap();
        assert_eq!(BarrierCertificate::load(&path).unwrap(), c);
    }

    type Fixture = (BarrierTemplate, Vec<SamplePair>, Vec<Vec<f64>>, Vec<Vec<f64>>);

    fn random_system(seed: u64) -> Fixture {
        let f = SystemModel::quadratic_1d(0.05, 1.2, -0.4).unwrap();
        let ds = sample_iid(&f, &unit(), 40, seed).unwrap();
        let x0 = sample_iid(&f, &RegionBox::interval(0.0, 0.3).unwrap(), 7, seed ^ 1).unwrap();
        let xu = sample_iid(&f, &RegionBox::interval(0.8, 1.0).unwrap(), 5, seed ^ 2).unwrap();
        (
            BarrierTemplate::quadratic_1d(),
            ds.pairs,
            x0.states().map(|s| s.to_vec()).collect(),
            xu.states().map(|s| s.to_vec()).collect(),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rows_agree_with_direct_evaluation(
            seed in any::<u64>(),
            d in prop::collection::vec(-5.0f64..5.0, 5),
            kappa in 0.05f64..1.0,
        ) {
            let (t, pairs, x0, xu) = random_system(seed);
            let x0_box = RegionBox::interval(0.0, 0.3).unwrap();
            let xu_box = RegionBox::interval(0.8, 1.0).unwrap();
            let regions = Regions { state_set: &unit(), initial_set: &x0_box, unsafe_set: &xu_box };
            let sys = assemble(&t, kappa, &pairs, &x0, &xu, &regions, &AssembleOptions::default()).unwrap();
            prop_assert_eq!(sys.count(RowTag::Initial) + sys.count(RowTag::Unsafe) + sys.count(RowTag::Flow),
                pairs.len() + x0.len() + xu.len());
            prop_assert_eq!(sys.count(RowTag::Level), 2);
            let (alpha, rho, q) = (d[0], d[1], &d[2..]);
            let b = |x: &[f64]| t.evaluate(q, x);
            let mut expected = Vec::new();
            expected.extend(x0.iter().map(|x| b(x) - alpha));
            expected.extend(xu.iter().map(|x| rho - b(x)));
            expected.extend(pairs.iter().map(|p| b(&p.successor) - kappa * b(&p.state)));
            expected.push(alpha - rho);
            expected.push(-rho);
            for (i, e) in expected.iter().enumerate() {
                let got = sys.row_value(i, &d);
                prop_assert!((got - e).abs() <= 1e-12 * (1.0 + e.abs()), "row {}: {} vs {}", i, got, e);
            }
        }

        #[test]
        fn flow_residuals_fall_as_kappa_grows(
            seed in any::<u64>(),
            q in prop::collection::vec(0.0f64..3.0, 3),
            k1 in 0.05f64..1.0, k2 in 0.05f64..1.0,
        ) {
            // Nonnegative coefficients on [0, 1] keep B >= 0.
            let (t, pairs, _, _) = random_system(seed);
            let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            for p in &pairs {
                let b = |k: f64| t.evaluate(&q, &p.successor) - k * t.evaluate(&q, &p.state);
                prop_assert!(b(hi) <= b(lo) + 1e-12);
            }
        }
    }
}

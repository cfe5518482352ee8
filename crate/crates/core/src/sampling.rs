//! One-step datasets (uniform grid or i.i.d.), their CSV + JSON persistence,
//! and the covering radius of a state set.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{RegionBox, SystemModel};

/// Largest dataset `sample_grid` will build.
pub const DEFAULT_MAX_SAMPLES: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePair {
    pub state: Vec<f64>,
    pub successor: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    UniformGrid,
    IidUniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub pairs: Vec<SamplePair>,
    pub scheme: Scheme,
    pub domain: RegionBox,
    pub seed: Option<u64>,
    /// Per-axis lattice counts for grid datasets.
    pub counts_per_axis: Option<Vec<usize>>,
    /// Set once a dataset has passed through the physics filter.
    pub filtered: bool,
}

/// Everything in a [`Dataset`] except the pairs; stored as the JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub scheme: Scheme,
    pub seed: Option<u64>,
    pub domain: RegionBox,
    pub count: usize,
    pub dim: usize,
    #[serde(default)]
    pub counts_per_axis: Option<Vec<usize>>,
    #[serde(default)]
    pub filtered: bool,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.pairs.iter().map(|p| p.state.as_slice())
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            scheme: self.scheme,
            seed: self.seed,
            domain: self.domain.clone(),
            count: self.pairs.len(),
            dim: self.dim(),
            counts_per_axis: self.counts_per_axis.clone(),
            filtered: self.filtered,
        }
    }

    /// SHA-256 over the raw bits of every state and successor.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim() as u64).to_le_bytes());
        for p in &self.pairs {
            for v in p.state.iter().chain(&p.successor) {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Same metadata, different pairs.
    pub fn with_pairs(&self, pairs: Vec<SamplePair>) -> Dataset {
        Dataset {
            pairs,
            scheme: self.scheme,
            domain: self.domain.clone(),
            seed: self.seed,
            counts_per_axis: self.counts_per_axis.clone(),
            filtered: self.filtered,
        }
    }
}

/// Lattice coordinates along one axis, with both endpoints exact.
pub(crate) fn axis_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { hi } else { lo + step * i as f64 })
        .collect()
}

/// Uniform lattice over `domain`, first axis varying slowest.
pub fn grid_states(domain: &RegionBox, counts_per_axis: &[usize]) -> Result<Vec<Vec<f64>>> {
    if counts_per_axis.len() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: counts_per_axis.len(),
        });
    }
    if let Some(c) = counts_per_axis.iter().find(|c| **c < 2) {
        return Err(Error::InvalidInput(format!(
            "grid needs at least 2 points per axis, got {c}"
        )));
    }
    let axes: Vec<Vec<f64>> = (0..domain.dim())
        .map(|i| axis_points(domain.lower()[i], domain.upper()[i], counts_per_axis[i]))
        .collect();
    let total: usize = counts_per_axis.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        out.push(idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect());
        for a in (0..axes.len()).rev() {
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(out)
}

fn pair_up(model: &SystemModel, states: Vec<Vec<f64>>) -> Result<Vec<SamplePair>> {
    states
        .into_par_iter()
        .map(|state| {
            let successor = model.step(&state)?;
            Ok(SamplePair { state, successor })
        })
        .collect()
}

pub fn sample_grid(model: &SystemModel, domain: &RegionBox, counts_per_axis: &[usize]) -> Result<Dataset> {
    sample_grid_with_capacity(model, domain, counts_per_axis, DEFAULT_MAX_SAMPLES)
}

pub fn sample_grid_with_capacity(
    model: &SystemModel,
    domain: &RegionBox,
    counts_per_axis: &[usize],
    capacity: usize,
) -> Result<Dataset> {
    check_dim(model, domain)?;
    let requested = counts_per_axis
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(*c))
        .unwrap_or(usize::MAX);
    if requested > capacity {
        return Err(Error::Capacity { requested, capacity });
    }
    let states = grid_states(domain, counts_per_axis)?;
    Ok(Dataset {
        pairs: pair_up(model, states)?,
        scheme: Scheme::UniformGrid,
        domain: domain.clone(),
        seed: None,
        counts_per_axis: Some(counts_per_axis.to_vec()),
        filtered: false,
    })
}

pub fn sample_iid(model: &SystemModel, domain: &RegionBox, count: usize, seed: u64) -> Result<Dataset> {
    check_dim(model, domain)?;
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<Vec<f64>> = (0..count).map(|_| domain.sample(&mut rng)).collect();
    Ok(Dataset {
        pairs: pair_up(model, states)?,
        scheme: Scheme::IidUniform,
        domain: domain.clone(),
        seed: Some(seed),
        counts_per_axis: None,
        filtered: false,
    })
}

fn check_dim(model: &SystemModel, domain: &RegionBox) -> Result<()> {
    if model.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: domain.dim(),
        });
    }
    Ok(())
}

/// Largest distance from any point of `domain` to its nearest state.
///
/// One-dimensional inputs use the exact sorted-gap formula and ignore
/// `reference_resolution`. Higher dimensions scan a lattice with
/// `reference_resolution` points per axis, so the result is exact on the
/// lattice and a lower estimate off it by at most half a lattice diagonal.
pub fn covering_radius(states: &[Vec<f64>], domain: &RegionBox, reference_resolution: usize) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::NoCover);
    }
    for s in states {
        if !domain.contains(s) {
            return Err(Error::InvalidInput(format!(
                "state {s:?} lies outside the covered domain"
            )));
        }
    }
    if domain.dim() == 1 {
        let mut xs: Vec<f64> = states.iter().map(|s| s[0]).collect();
        return Ok(covering_radius_1d(&mut xs, domain.lower()[0], domain.upper()[0]));
    }
    if reference_resolution < 2 {
        return Err(Error::InvalidInput("reference resolution must be >= 2".into()));
    }
    let index = BucketIndex::new(states, domain);
    let counts = vec![reference_resolution; domain.dim()];
    let axes: Vec<Vec<f64>> = (0..domain.dim())
        .map(|i| axis_points(domain.lower()[i], domain.upper()[i], counts[i]))
        .collect();
    // Parallel over the slowest axis, max-reduction over the rest.
    let radius = axes[0]
        .par_iter()
        .map(|&x0| {
            let mut best = 0.0f64;
            let mut p = vec![0.0; axes.len()];
            p[0] = x0;
            let mut idx = vec![0usize; axes.len() - 1];
            loop {
                for (a, &i) in idx.iter().enumerate() {
                    p[a + 1] = axes[a + 1][i];
                }
                best = best.max(index.nearest_distance(&p));
                let mut a = idx.len();
                loop {
                    if a == 0 {
                        return best;
                    }
                    a -= 1;
                    idx[a] += 1;
                    if idx[a] < axes[a + 1].len() {
                        break;
                    }
                    idx[a] = 0;
                }
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(radius)
}

/// Exact covering radius of points on `[lo, hi]`. Sorts `xs` in place.
pub fn covering_radius_1d(xs: &mut [f64], lo: f64, hi: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mut r = (xs[0] - lo).max(hi - xs[xs.len() - 1]);
    for w in xs.windows(2) {
        r = r.max(0.5 * (w[1] - w[0]));
    }
    r
}

/// Uniform bucket grid for nearest-neighbour queries.
struct BucketIndex<'a> {
    states: &'a [Vec<f64>],
    lower: Vec<f64>,
    cell: Vec<f64>,
    cells_per_axis: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> BucketIndex<'a> {
    fn new(states: &'a [Vec<f64>], domain: &RegionBox) -> Self {
        let n = domain.dim();
        let cells_per_axis = ((states.len() as f64).powf(1.0 / n as f64).floor() as usize).max(1);
        let cell: Vec<f64> = domain.widths().iter().map(|w| w / cells_per_axis as f64).collect();
        let mut idx = BucketIndex {
            states,
            lower: domain.lower().to_vec(),
            cell,
            cells_per_axis,
            buckets: vec![Vec::new(); cells_per_axis.pow(n as u32)],
        };
        for (i, s) in states.iter().enumerate() {
            let c = idx.cell_of(s);
            let flat = idx.flatten(&c);
            idx.buckets[flat].push(i as u32);
        }
        idx
    }

    fn cell_of(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .enumerate()
            .map(|(a, v)| {
                let c = ((v - self.lower[a]) / self.cell[a]).floor() as i64;
                c.clamp(0, self.cells_per_axis as i64 - 1)
            })
            .collect()
    }

    fn flatten(&self, c: &[i64]) -> usize {
        c.iter().fold(0usize, |acc, &i| acc * self.cells_per_axis + i as usize)
    }

    fn nearest_distance(&self, p: &[f64]) -> f64 {
        let home = self.cell_of(p);
        let min_cell = self.cell.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut best = f64::INFINITY;
        let max_ring = self.cells_per_axis as i64;
        for ring in 0..=max_ring {
            // Cells in ring r are at least (r - 1) * min_cell away.
            if ring > 0 && best <= (ring - 1) as f64 * min_cell {
                break;
            }
            self.visit_ring(&home, ring, &mut |b| {
                for &i in &self.buckets[b] {
                    let d2: f64 = self.states[i as usize]
                        .iter()
                        .zip(p)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    best = best.min(d2.sqrt());
                }
            });
        }
        best
    }

    fn visit_ring(&self, home: &[i64], ring: i64, f: &mut dyn FnMut(usize)) {
        let n = home.len();
        let mut off = vec![-ring; n];
        loop {
            if off.iter().any(|o| o.abs() == ring) {
                let cell: Vec<i64> = home.iter().zip(&off).map(|(h, o)| h + o).collect();
                if cell.iter().all(|c| *c >= 0 && *c < self.cells_per_axis as i64) {
                    f(self.flatten(&cell));
                }
            }
            let mut a = n;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                off[a] += 1;
                if off[a] <= ring {
                    break;
                }
                off[a] = -ring;
            }
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `path` (CSV, header `x_1..x_n,y_1..y_n`) and its `.meta.json` sidecar.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let n = dataset.dim();
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let header: Vec<String> = (1..=n)
        .map(|i| format!("x_{i}"))
        .chain((1..=n).map(|i| format!("y_{i}")))
        .collect();
    w.write_record(&header)?;
    for p in &dataset.pairs {
        w.write_record(p.state.iter().chain(&p.successor).map(|v| fmt17(*v)))?;
    }
    w.flush()?;
    let mut meta = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut meta, &dataset.meta())?;
    meta.write_all(b"\n")?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let meta_path = sidecar_path(path);
    let meta: DatasetMeta = serde_json::from_reader(File::open(&meta_path)?)?;
    let n = meta.dim;
    if meta.domain.dim() != n {
        return Err(Error::Parse {
            path: meta_path,
            line: 1,
            message: "domain dimension disagrees with `dim`".into(),
        });
    }
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut r = csv::Reader::from_reader(File::open(path)?);
    let header = r.headers()?.clone();
    if header.len() != 2 * n {
        return Err(parse_err(
            1,
            format!(
                "expected {} columns (x_1..x_{n}, y_1..y_{n}), found {}",
                2 * n,
                header.len()
            ),
        ));
    }
    for (i, h) in header.iter().enumerate() {
        let want = if i < n {
            format!("x_{}", i + 1)
        } else {
            format!("y_{}", i - n + 1)
        };
        if h.trim() != want {
            return Err(parse_err(1, format!("column {} is `{h}`, expected `{want}`", i + 1)));
        }
    }
    let mut pairs = Vec::with_capacity(meta.count);
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 2 * n {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", 2 * n, rec.len()),
            ));
        }
        let vals = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(line, format!("`{f}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        pairs.push(SamplePair {
            state: vals[..n].to_vec(),
            successor: vals[n..].to_vec(),
        });
    }
    if pairs.len() != meta.count {
        return Err(parse_err(
            pairs.len() as u64 + 1,
            format!("sidecar declares {} pairs, file has {}", meta.count, pairs.len()),
        ));
    }
    Ok(Dataset {
        pairs,
        scheme: meta.scheme,
        domain: meta.domain,
        seed: meta.seed,
        counts_per_axis: meta.counts_per_axis,
        filtered: meta.filtered,
    })
}

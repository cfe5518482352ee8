//! Plain CSV tables for external plotting.

use std::fs;
use std::path::{Path, PathBuf};

use super::run::{generate, RunReport};
use crate::error::{Error, Result};
use crate::filter::discrepancy_profile;
use crate::models::RegionBox;
use crate::sampling::grid_states;

/// Points per axis for the barrier curve (1-D) or surface (2-D and up).
pub const CURVE_POINTS_1D: usize = 2_001;
pub const SURFACE_POINTS_PER_AXIS: usize = 201;

fn header(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

fn floats(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|x| format!("{x:.16e}"))
}

fn write_barrier(report: &RunReport, domain: &RegionBox, path: &Path) -> Result<()> {
    let n = domain.dim();
    let per_axis = if n == 1 {
        CURVE_POINTS_1D
    } else {
        SURFACE_POINTS_PER_AXIS
    };
    let grid = grid_states(domain, &vec![per_axis; n])?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header("x", n).into_iter().chain(["b".to_string()]))?;
    for x in &grid {
        let b = report.certificate.value(x);
        w.write_record(floats(x).chain([format!("{b:.16e}")]))?;
    }
    w.flush()?;
    Ok(())
}

fn write_levels(report: &RunReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["level", "value"])?;
    w.write_record(["alpha".to_string(), format!("{:.16e}", report.certificate.alpha)])?;
    w.write_record(["rho".to_string(), format!("{:.16e}", report.certificate.rho)])?;
    w.flush()?;
    Ok(())
}

fn write_regions(regions: &[(&str, &RegionBox)], path: &Path) -> Result<()> {
    let n = regions[0].1.dim();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(
        ["region".to_string()]
            .into_iter()
            .chain(header("lower", n))
            .chain(header("upper", n)),
    )?;
    for (name, r) in regions {
        w.write_record(
            [name.to_string()]
                .into_iter()
                .chain(floats(r.lower()))
                .chain(floats(r.upper())),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Regenerates the run's data from the embedded config and writes
/// `barrier.csv`, `levels.csv`, `samples.csv`, `regions.csv` and, for
/// filtered runs, `jump.csv`.
pub fn plotdata(report_path: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    if !report_path.is_file() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("run report not found: {}", report_path.display()),
        )));
    }
    let report = RunReport::load(report_path)?;
    let config = &report.config;
    let system = config.resolve()?;
    let dataset = generate(config, &system)?;
    if dataset.content_hash() != report.dataset_hashes.generated {
        log::warn!(
            "regenerated dataset differs from the one recorded in {}",
            report_path.display()
        );
    }
    fs::create_dir_all(out)?;
    let mut written = Vec::new();

    let barrier = out.join("barrier.csv");
    write_barrier(&report, &system.state_set, &barrier)?;
    written.push(barrier);

    let levels = out.join("levels.csv");
    write_levels(&report, &levels)?;
    written.push(levels);

    let profile = discrepancy_profile(&dataset, &system.physics, config.delta)?;
    let samples = out.join("samples.csv");
    {
        let n = dataset.dim();
        let mut w = csv::Writer::from_path(&samples)?;
        w.write_record(
            header("x", n)
                .into_iter()
                .chain(header("y", n))
                .chain(["discrepancy".to_string(), "retained".to_string()]),
        )?;
        for (pair, (_, d)) in dataset.pairs.iter().zip(&profile.entries) {
            let kept = !config.filter || *d <= config.delta;
            w.write_record(
                floats(&pair.state)
                    .chain(floats(&pair.successor))
                    .chain([format!("{d:.16e}"), u8::from(kept).to_string()]),
            )?;
        }
        w.flush()?;
    }
    written.push(samples);

    let regions = out.join("regions.csv");
    write_regions(
        &[
            ("state", &system.state_set),
            ("initial", &system.initial_set),
            ("unsafe", &system.unsafe_set),
        ],
        &regions,
    )?;
    written.push(regions);

    if config.filter {
        if let Some(jump) = &profile.max_jump {
            let path = out.join("jump.csv");
            let n = jump.from.len();
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(
                header("from", n)
                    .into_iter()
                    .chain(header("to", n))
                    .chain(["width".to_string(), "discarded".to_string()]),
            )?;
            w.write_record(
                floats(&jump.from)
                    .chain(floats(&jump.to))
                    .chain([format!("{:.16e}", jump.width), jump.discarded.to_string()]),
            )?;
            w.flush()?;
            written.push(path);
        }
    }
    Ok(written)
}

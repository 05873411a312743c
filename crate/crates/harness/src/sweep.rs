//! Parameter sweeps: trials fan out over a thread pool, rows come back in
//! grid order, aggregates are computed per grid value.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use rfi_core::metrics::{mean, median, std_dev};
use rfi_core::rng::derive_seed_path;

use crate::config::{Axis, ScenarioConfig};
use crate::error::{HarnessError, Result};
use crate::trial::{run_trial, TrialRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub axis: f64,
    pub rqf_mean: f64,
    pub rqf_median: f64,
    pub rqf_std: f64,
    /// Trials that produced a finite RQF.
    pub n: usize,
}

impl Aggregate {
    fn of(axis: f64, rows: &[&TrialRow]) -> Self {
        let v: Vec<f64> = rows
            .iter()
            .map(|r| r.rqf)
            .filter(|x| x.is_finite())
            .collect();
        Self {
            axis,
            rqf_mean: mean(&v),
            rqf_median: median(&v),
            rqf_std: std_dev(&v),
            n: v.len(),
        }
    }
}

/// Aggregate over UE distances falling in `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceBucket {
    pub lo_m: f64,
    pub hi_m: f64,
    pub rqf_mean: f64,
    pub rqf_median: f64,
    pub rqf_std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: Axis,
    /// Ordered by grid position, then trial.
    pub rows: Vec<TrialRow>,
    /// One per grid value, in grid order.
    pub aggregates: Vec<Aggregate>,
    /// Present for `ue_distance` sweeps.
    pub distance_buckets: Option<Vec<DistanceBucket>>,
}

impl SweepReport {
    pub fn aggregate_at(&self, axis_value: f64) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.axis == axis_value)
    }

    pub fn rows_at(&self, axis_value: f64) -> impl Iterator<Item = &TrialRow> {
        self.rows.iter().filter(move |r| r.axis == axis_value)
    }
}

/// Seed of trial `trial`. It depends on the axis but not on the grid value,
/// so all grid values share their random draws.
pub fn trial_seed(base_seed: u64, axis: Axis, trial: usize) -> u64 {
    derive_seed_path(base_seed, &[axis.id(), trial as u64])
}

/// Equal-width buckets over `[0, radius]`; the last one is closed.
pub fn distance_buckets(rows: &[TrialRow], radius_m: f64, n_bins: usize) -> Vec<DistanceBucket> {
    let width = radius_m / n_bins as f64;
    (0..n_bins)
        .map(|b| {
            let lo = b as f64 * width;
            let hi = if b + 1 == n_bins {
                radius_m
            } else {
                lo + width
            };
            let sel: Vec<&TrialRow> = rows
                .iter()
                .filter(|r| r.axis >= lo && (r.axis < hi || (b + 1 == n_bins && r.axis <= hi)))
                .collect();
            let a = Aggregate::of(0.0, &sel);
            DistanceBucket {
                lo_m: lo,
                hi_m: hi,
                rqf_mean: a.rqf_mean,
                rqf_median: a.rqf_median,
                rqf_std: a.rqf_std,
                n: a.n,
            }
        })
        .collect()
}

/// Validates `cfg` and runs every (grid value, trial) pair on the current
/// rayon pool.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let per_value: Vec<ScenarioConfig> = cfg
        .sweep
        .grid
        .iter()
        .map(|&v| cfg.with_axis_value(v))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..per_value.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    let axis = cfg.sweep.axis;
    let rows: Vec<TrialRow> = jobs
        .par_iter()
        .map(|&(g, t)| {
            run_trial(
                &per_value[g],
                cfg.sweep.grid[g],
                t,
                trial_seed(cfg.base_seed, axis, t),
            )
        })
        .collect();
    let aggregates = cfg
        .sweep
        .grid
        .iter()
        .enumerate()
        .map(|(g, &v)| {
            let sel: Vec<&TrialRow> = rows[g * cfg.trials..(g + 1) * cfg.trials].iter().collect();
            Aggregate::of(v, &sel)
        })
        .collect();
    let distance_buckets = (axis == Axis::UeDistance).then(|| {
        let radius = cfg
            .channel
            .cell_radius_m
            .unwrap_or_else(|| cfg.channel.scenario.cell_radius_m());
        distance_buckets(&rows, radius, cfg.sweep.distance_bins)
    });
    Ok(SweepReport {
        axis,
        rows,
        aggregates,
        distance_buckets,
    })
}

/// [`run_sweep`] on a dedicated pool of `threads` workers. Results do not
/// depend on the thread count.
pub fn run_sweep_threads(cfg: &ScenarioConfig, threads: Option<usize>) -> Result<SweepReport> {
    match threads {
        None => run_sweep(cfg),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Config(format!("threads: {e}")))?;
            pool.install(|| run_sweep(cfg))
        }
    }
}

pub fn write_rows<W: Write>(rows: &[TrialRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_aggregates<W: Write>(aggs: &[Aggregate], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for a in aggs {
        out.serialize(a)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_buckets<W: Write>(buckets: &[DistanceBucket], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for b in buckets {
        out.serialize(b)?;
    }
    out.flush()?;
    Ok(())
}

/// `<stem><suffix>.csv` next to `path`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.csv"))
}

/// Writes the trial rows to `path`, the aggregates to `<stem>_aggregate.csv`
/// and, for distance sweeps, buckets to `<stem>_distance.csv`. Returns the
/// files written.
pub fn write_report(report: &SweepReport, path: &Path) -> Result<Vec<PathBuf>> {
    let mut written = vec![path.to_path_buf()];
    write_rows(&report.rows, std::fs::File::create(path)?)?;
    let agg = sibling_path(path, "_aggregate");
    write_aggregates(&report.aggregates, std::fs::File::create(&agg)?)?;
    written.push(agg);
    if let Some(b) = &report.distance_buckets {
        let p = sibling_path(path, "_distance");
        write_buckets(b, std::fs::File::create(&p)?)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(axis: f64, rqf: f64) -> TrialRow {
        TrialRow {
            axis,
            trial: 0,
            seed: 0,
            rqf,
            removal_fraction: 0.5,
            inr_db: 5.0,
            error_code: None,
            m_r: 1,
            m_t: 1,
        }
    }

    #[test]
    fn csv_header_and_nan_rows() {
        let mut bad = row(1.0, f64::NAN);
        bad.error_code = Some("ill_conditioned".into());
        let mut buf = Vec::new();
        write_rows(&[row(1.0, 0.25), bad], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "axis,trial,seed,rqf,removal_fraction,inr_db,error_code"
        );
        assert_eq!(lines[1], "1.0,0,0,0.25,0.5,5.0,");
        assert_eq!(lines[2], "1.0,0,0,NaN,0.5,5.0,ill_conditioned");
    }

    #[test]
    fn aggregates_skip_failures() {
        let rows = [row(0.0, 1.0), row(0.0, 3.0), row(0.0, f64::NAN)];
        let sel: Vec<&TrialRow> = rows.iter().collect();
        let a = Aggregate::of(0.0, &sel);
        assert_eq!((a.rqf_mean, a.rqf_median, a.n), (2.0, 2.0, 2));
        assert!((a.rqf_std - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn buckets_cover_radius() {
        let rows = [
            row(100.0, 1.0),
            row(250.0, 2.0),
            row(1000.0, 4.0),
            row(999.0, 6.0),
        ];
        let b = distance_buckets(&rows, 1000.0, 5);
        assert_eq!(b.len(), 5);
        assert_eq!(b[0].n, 1);
        assert_eq!(b[1].n, 1);
        assert_eq!(b[4].n, 2);
        assert_eq!(b[4].rqf_mean, 5.0);
        assert_eq!(b[4].hi_m, 1000.0);
    }

    #[test]
    fn seeds_ignore_grid_value() {
        let a = trial_seed(7, Axis::Inr, 3);
        assert_eq!(a, trial_seed(7, Axis::Inr, 3));
        assert_ne!(a, trial_seed(7, Axis::Inr, 4));
        assert_ne!(a, trial_seed(7, Axis::Occupancy, 3));
        assert_ne!(a, trial_seed(8, Axis::Inr, 3));
    }

    #[test]
    fn sibling_names() {
        let p = Path::new("/tmp/out/sweep.csv");
        assert_eq!(
            sibling_path(p, "_aggregate"),
            Path::new("/tmp/out/sweep_aggregate.csv")
        );
    }
}

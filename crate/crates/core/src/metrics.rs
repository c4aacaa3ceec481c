//! Learning-curve aggregation and per-iteration cost accounting.

use std::fmt;

use thiserror::Error;

use crate::algorithms::Algorithm;
use crate::graph::Graph;

/// Lowest value reported in a dB curve; exact zeros clamp here.
pub const DB_FLOOR: f64 = -320.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no runs to average")]
    EmptyInput,
    #[error("run {run} has {got} iterations, expected {expected}")]
    LengthMismatch { run: usize, expected: usize, got: usize },
}

pub fn to_db(linear: f64) -> f64 {
    if linear > 0.0 {
        (10.0 * linear.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Squared-error series from one Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub mse: Vec<f64>,
    pub msd: Vec<f64>,
}

/// Run-averaged network MSE and MSD in dB. Index `i` is iteration `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub mse_db: Vec<f64>,
    pub msd_db: Vec<f64>,
    pub n_runs: usize,
}

/// Linear-domain mean across runs, per iteration.
pub fn mean_series<'a>(runs: impl IntoIterator<Item = &'a [f64]>) -> Result<Vec<f64>, MetricsError> {
    let mut iter = runs.into_iter();
    let first = iter.next().ok_or(MetricsError::EmptyInput)?;
    let mut acc = first.to_vec();
    let mut count = 1usize;
    for (idx, run) in iter.enumerate() {
        if run.len() != acc.len() {
            return Err(MetricsError::LengthMismatch {
                run: idx + 1,
                expected: acc.len(),
                got: run.len(),
            });
        }
        for (a, v) in acc.iter_mut().zip(run) {
            *a += v;
        }
        count += 1;
    }
    for a in &mut acc {
        *a /= count as f64;
    }
    Ok(acc)
}

/// Averages runs in the linear domain, then converts to dB.
pub fn average_curves(runs: &[RunSeries]) -> Result<LearningCurve, MetricsError> {
    if runs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = runs[0].mse.len();
    for (run, r) in runs.iter().enumerate() {
        for got in [r.mse.len(), r.msd.len()] {
            if got != n {
                return Err(MetricsError::LengthMismatch { run, expected: n, got });
            }
        }
    }
    let mse = mean_series(runs.iter().map(|r| r.mse.as_slice()))?;
    let msd = mean_series(runs.iter().map(|r| r.msd.as_slice()))?;
    Ok(LearningCurve {
        mse_db: mse.into_iter().map(to_db).collect(),
        msd_db: msd.into_iter().map(to_db).collect(),
        n_runs: runs.len(),
    })
}

impl LearningCurve {
    pub fn len(&self) -> usize {
        self.mse_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mse_db.is_empty()
    }

    /// CSV with header `iteration,mse_db,msd_db`; iterations count from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,mse_db,msd_db\n");
        for (i, (mse, msd)) in self.mse_db.iter().zip(&self.msd_db).enumerate() {
            out.push_str(&format!("{},{mse:.12},{msd:.12}\n", i + 1));
        }
        out
    }

    /// Mean MSE over the last `fraction` of iterations, averaged in the
    /// linear domain and reported in dB.
    pub fn tail_mse_db(&self, fraction: f64) -> f64 {
        let n = self.mse_db.len();
        let take = ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1));
        let tail = &self.mse_db[n - take..];
        let mean = tail.iter().map(|db| 10f64.powf(db / 10.0)).sum::<f64>() / take as f64;
        to_db(mean)
    }
}

/// Index of the first entry at or below `threshold_db`.
pub fn first_crossing(series_db: &[f64], threshold_db: f64) -> Option<usize> {
    series_db.iter().position(|&v| v <= threshold_db)
}

/// First iteration index whose MSD is at or below `threshold_db`.
pub fn iterations_to_threshold(curve: &LearningCurve, threshold_db: f64) -> Option<usize> {
    first_crossing(&curve.msd_db, threshold_db)
}

/// Per-iteration cost of an algorithm beyond ATC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CostReport {
    pub extra_multiplications: u64,
    pub extra_additions: u64,
    /// Extra length-M vector sends.
    pub extra_transmissions: u64,
}

/// SI-LMS pays one extra M-entry weighted sum over each closed
/// neighborhood, and every node sends its adapted estimate to each of its
/// neighbors once more per iteration. The other strategies cost nothing
/// extra relative to ATC.
pub fn cost_report(algorithm: Algorithm, graph: &Graph, m: usize) -> CostReport {
    match algorithm {
        Algorithm::SiLms => {
            let n = graph.n_nodes();
            let closed: u64 = (0..n).map(|k| graph.members(k).len() as u64).sum();
            CostReport {
                extra_multiplications: m as u64 * closed,
                extra_additions: m as u64 * closed,
                extra_transmissions: closed - n as u64,
            }
        }
        Algorithm::Atc | Algorithm::Cta | Algorithm::NoCoop => CostReport::default(),
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "extra_multiplications={}", self.extra_multiplications)?;
        writeln!(f, "extra_additions={}", self.extra_additions)?;
        writeln!(f, "extra_transmissions={}", self.extra_transmissions)
    }
}

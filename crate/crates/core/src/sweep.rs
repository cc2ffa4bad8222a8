//! Parameter-grid sweeps with deterministic per-cell seeding.
//!
//! A plan is a base parameter set plus two swept keys. Every (cell,
//! replica) pair gets its own counter-derived shock streams, so results
//! are identical whatever the worker count or execution order, and each
//! cell is unaffected by the presence of the others.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{self};
use crate::indicators::{CrisisReport, Phase};
use crate::params::{ModelParams, ParamsError};
use crate::scalar::{cast, Scalar};

/// Floor for log10 of a zero severity (Xi = 0 maps to -12, never -inf).
pub const LOG10_XI_FLOOR: f64 = -12.0;

/// One swept parameter: a config key and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub key: String,
    pub values: Vec<f64>,
}

/// Grid sweep description. The plan's horizon and burn-in override the
/// base engine settings in every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan<S> {
    pub base: ModelParams<S>,
    pub axis1: Axis,
    pub axis2: Axis,
    pub seeds_per_cell: u64,
    pub horizon: u64,
    pub burn_in: u64,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("axis `{axis}` has no values")]
    EmptyAxis { axis: String },
    #[error("no replicas: seeds_per_cell must be at least 1")]
    NoSeeds,
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Seed-aggregated results of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAggregates<S> {
    /// Median over seeds of log10 Xi_c (floored at -12).
    pub median_log10_xi_c: S,
    /// Median over seeds of log10 Xi_k (floored at -12).
    pub median_log10_xi_k: S,
    /// Majority phase label; ties break toward the calmer phase.
    pub majority_phase: Phase,
    /// Mean over seeds of the per-run mean Sharpe ratio.
    pub mean_sharpe: S,
    /// Mean over seeds of T_< (seeds without interior low spells skipped).
    pub t_low_mean: Option<S>,
    /// Mean over seeds of T_> (seeds without interior high spells skipped).
    pub t_high_mean: Option<S>,
    /// Per-seed reports, replica order.
    pub reports: Vec<CrisisReport<S>>,
}

/// One grid cell: coordinates plus aggregates, or the error that stopped
/// the cell (other cells are unaffected).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCell<S> {
    pub cell_index: u64,
    pub coords: (f64, f64),
    pub outcome: Result<CellAggregates<S>, String>,
}

/// Row-major grid of cells: axis1 varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid<S> {
    pub cells: Vec<PhaseCell<S>>,
    pub shape: (usize, usize),
}

impl<S: Scalar> SweepPlan<S> {
    /// Check axes and replica count without running anything.
    pub fn validate(&self) -> Result<(), SweepError> {
        for axis in [&self.axis1, &self.axis2] {
            if axis.values.is_empty() {
                return Err(SweepError::EmptyAxis {
                    axis: axis.key.clone(),
                });
            }
            // Probe the key on a scratch copy so unknown or non-numeric
            // keys surface before any work is scheduled.
            let mut probe = self.base.clone();
            probe.set_key(&axis.key, &format_value(axis.values[0]))?;
        }
        if self.seeds_per_cell == 0 {
            return Err(SweepError::NoSeeds);
        }
        Ok(())
    }

    /// Number of cells in the grid.
    pub fn len(&self) -> usize {
        self.axis1.values.len() * self.axis2.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major cell index of grid position (i, j).
    pub fn cell_index(&self, i: usize, j: usize) -> u64 {
        (i * self.axis2.values.len() + j) as u64
    }

    /// Parameters of grid position (i, j).
    pub fn cell_params(&self, i: usize, j: usize) -> Result<ModelParams<S>, ParamsError> {
        let mut p = self.base.clone();
        p.engine.horizon = self.horizon;
        p.engine.burn_in = self.burn_in;
        p.set_key(&self.axis1.key, &format_value(self.axis1.values[i]))?;
        p.set_key(&self.axis2.key, &format_value(self.axis2.values[j]))?;
        p.validate()?;
        Ok(p)
    }
}

/// Shortest round-trip decimal for an axis value.
fn format_value(v: f64) -> String {
    format!("{v}")
}

/// log10 with the documented floor for vanishing severities.
pub fn log10_xi<S: Scalar>(xi: S) -> S {
    let floor = cast::<S>(LOG10_XI_FLOOR);
    if xi <= S::zero() {
        floor
    } else {
        xi.log10().max(floor)
    }
}

fn median<S: Scalar>(values: &mut [S]) -> S {
    values.sort_by(|a, b| a.partial_cmp(b).expect("severities are never NaN"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / cast(2.0)
    }
}

fn mean_of_present<S: Scalar>(values: impl Iterator<Item = Option<S>>) -> Option<S> {
    let mut acc = S::zero();
    let mut n = 0u64;
    for v in values.flatten() {
        acc = acc + v;
        n += 1;
    }
    (n > 0).then(|| acc / cast(n as f64))
}

fn aggregate<S: Scalar>(reports: Vec<CrisisReport<S>>) -> CellAggregates<S> {
    let mut log_c: Vec<S> = reports.iter().map(|r| log10_xi(r.xi_c)).collect();
    let mut log_k: Vec<S> = reports.iter().map(|r| log10_xi(r.xi_k)).collect();
    let mut votes = [0usize; 4];
    for r in &reports {
        votes[r.phase as usize] += 1;
    }
    // Deterministic tie-break: the earliest (calmest) phase with top votes.
    let top = *votes.iter().max().unwrap();
    let majority_phase = [Phase::LkLc, Phase::LkHc, Phase::HkLc, Phase::HkHc]
        .into_iter()
        .find(|p| votes[*p as usize] == top)
        .unwrap();
    let mean_sharpe =
        reports.iter().fold(S::zero(), |a, r| a + r.mean_sharpe) / cast(reports.len() as f64);
    CellAggregates {
        median_log10_xi_c: median(&mut log_c),
        median_log10_xi_k: median(&mut log_k),
        majority_phase,
        mean_sharpe,
        t_low_mean: mean_of_present(reports.iter().map(|r| r.t_low_mean)),
        t_high_mean: mean_of_present(reports.iter().map(|r| r.t_high_mean)),
        reports,
    }
}

fn run_cell<S: Scalar>(plan: &SweepPlan<S>, i: usize, j: usize) -> PhaseCell<S> {
    let cell_index = plan.cell_index(i, j);
    let coords = (plan.axis1.values[i], plan.axis2.values[j]);
    let outcome = (|| {
        let p = plan.cell_params(i, j).map_err(|e| e.to_string())?;
        let mut reports = Vec::with_capacity(plan.seeds_per_cell as usize);
        for replica in 0..plan.seeds_per_cell {
            let traj = dynamics::run_seeded(&p, cell_index, replica).map_err(|e| e.to_string())?;
            let report = CrisisReport::from_states(&traj.states, &p).map_err(|e| e.to_string())?;
            reports.push(report);
        }
        Ok(aggregate(reports))
    })();
    PhaseCell {
        cell_index,
        coords,
        outcome,
    }
}

/// Run every cell of the plan, `seeds_per_cell` replicas each. `workers`
/// pins the rayon pool size (None uses the global pool); the output is
/// identical either way.
pub fn run_sweep<S: Scalar>(
    plan: &SweepPlan<S>,
    workers: Option<usize>,
) -> Result<SweepGrid<S>, SweepError> {
    plan.validate()?;
    let coords: Vec<(usize, usize)> = (0..plan.axis1.values.len())
        .flat_map(|i| (0..plan.axis2.values.len()).map(move |j| (i, j)))
        .collect();
    let cells = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SweepError::Pool(e.to_string()))?
            .install(|| {
                coords
                    .par_iter()
                    .map(|&(i, j)| run_cell(plan, i, j))
                    .collect::<Vec<_>>()
            }),
        None => coords
            .par_iter()
            .map(|&(i, j)| run_cell(plan, i, j))
            .collect(),
    };
    Ok(SweepGrid {
        cells,
        shape: (plan.axis1.values.len(), plan.axis2.values.len()),
    })
}

/// Grid CSV header.
pub const GRID_HEADER: &str =
    "axis1,axis2,log10_xi_c,log10_xi_k,mean_sharpe,phase,t_low_mean,t_high_mean";

/// Write one CSV row per cell, row-major. Failed cells carry `error` in
/// the phase column and `nan` numerics; their messages go to the manifest.
pub fn write_grid_csv<S: Scalar, W: Write>(grid: &SweepGrid<S>, out: &mut W) -> io::Result<()> {
    writeln!(out, "{GRID_HEADER}")?;
    for cell in &grid.cells {
        let (a1, a2) = cell.coords;
        match &cell.outcome {
            Ok(agg) => {
                let opt = |v: &Option<S>| v.map(|x| x.to_string()).unwrap_or_else(|| "nan".into());
                writeln!(
                    out,
                    "{a1},{a2},{},{},{},{},{},{}",
                    agg.median_log10_xi_c,
                    agg.median_log10_xi_k,
                    agg.mean_sharpe,
                    agg.majority_phase,
                    opt(&agg.t_low_mean),
                    opt(&agg.t_high_mean),
                )?;
            }
            Err(_) => {
                writeln!(out, "{a1},{a2},nan,nan,nan,error,nan,nan")?;
            }
        }
    }
    Ok(())
}

/// A failed cell as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub cell_index: u64,
    pub coords: (f64, f64),
    pub error: String,
}

/// Sweep manifest: everything needed to reproduce the grid, plus
/// completion state. Written with `complete: false` before the sweep and
/// rewritten with `complete: true` (and any failures) afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub version: String,
    pub config_hash: u64,
    pub config: String,
    pub axis1: Axis,
    pub axis2: Axis,
    pub seeds_per_cell: u64,
    pub horizon: u64,
    pub burn_in: u64,
    pub master_seed: u64,
    pub complete: bool,
    pub failed_cells: Vec<FailedCell>,
}

impl<S: Scalar> SweepPlan<S> {
    /// Build the manifest for this plan; pass the finished grid to mark it
    /// complete and capture per-cell failures.
    pub fn manifest(&self, finished: Option<&SweepGrid<S>>) -> SweepManifest {
        let mut effective = self.base.clone();
        effective.engine.horizon = self.horizon;
        effective.engine.burn_in = self.burn_in;
        let failed_cells = finished
            .map(|grid| {
                grid.cells
                    .iter()
                    .filter_map(|cell| {
                        cell.outcome.as_ref().err().map(|error| FailedCell {
                            cell_index: cell.cell_index,
                            coords: cell.coords,
                            error: error.clone(),
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        SweepManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: effective.config_hash(),
            config: effective.save(),
            axis1: self.axis1.clone(),
            axis2: self.axis2.clone(),
            seeds_per_cell: self.seeds_per_cell,
            horizon: self.horizon,
            burn_in: self.burn_in,
            master_seed: self.base.engine.seed,
            complete: finished.is_some(),
            failed_cells,
        }
    }
}

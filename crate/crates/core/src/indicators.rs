//! Crisis indicators, phase labels, spell statistics, and histograms.
//!
//! Severities are time averages of the relative shortfall,
//!   Xi_c = (1/T) sum_t (1 - c_t/c0) Theta(c0 - c_t),
//!   Xi_k = (1/T) sum_t (1 - k_t/n_t) Theta(n_t - k_t),
//! with Theta the unit step (Theta(0) = 1, which contributes weight zero
//! at the boundary). A phase is labelled H on an axis when its severity
//! reaches the threshold, L below it; above 0.99 crises are flagged as
//! permanent.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::EconomyState;
use crate::params::ModelParams;
use crate::scalar::{cast, Scalar};

/// Severity above which crises count as permanent.
pub const PERMANENT_THRESHOLD: f64 = 0.99;
/// Default number of histogram bins.
pub const HISTOGRAM_BINS: usize = 100;
/// Minimum share of total mass a histogram peak needs to count as a mode.
/// Calibrated against the crisis-mode geometry: short consumption crises
/// at the bistable benchmark put 3–4% of the mass in the low mode, while
/// spurious noise peaks stay well under 0.5%, so 2.5% splits the two
/// populations with an order of magnitude to spare on either side.
pub const PEAK_MASS_FLOOR: f64 = 0.025;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndicatorError {
    #[error("empty series")]
    EmptySeries,
    #[error("histogram needs at least 2 bins, got {bins}")]
    TooFewBins { bins: usize },
}

/// Phase label: capital axis first (L/H by Xi_k), consumption axis second
/// (L/H by Xi_c). The derive order doubles as the deterministic tie-break
/// order for majority votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    LkLc,
    LkHc,
    HkLc,
    HkHc,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::LkLc => "LkLc",
            Phase::LkHc => "LkHc",
            Phase::HkLc => "HkLc",
            Phase::HkHc => "HkHc",
        })
    }
}

/// Mean severity of consumption shortfalls below `c0`.
pub fn xi_c<S: Scalar>(states: &[EconomyState<S>], c0: S) -> Result<S, IndicatorError> {
    if states.is_empty() {
        return Err(IndicatorError::EmptySeries);
    }
    let one = S::one();
    let mut acc = S::zero();
    for s in states {
        if s.c <= c0 {
            acc = acc + (one - s.c / c0);
        }
    }
    Ok(acc / cast(states.len() as f64))
}

/// Mean severity of capital scarcity (capital below labour).
pub fn xi_k<S: Scalar>(states: &[EconomyState<S>]) -> Result<S, IndicatorError> {
    if states.is_empty() {
        return Err(IndicatorError::EmptySeries);
    }
    let one = S::one();
    let mut acc = S::zero();
    for s in states {
        if s.k <= s.n {
            acc = acc + (one - s.k / s.n);
        }
    }
    Ok(acc / cast(states.len() as f64))
}

/// Label the phase from the two severities: H when severity >= threshold.
pub fn classify_phase<S: Scalar>(xi_c: S, xi_k: S, threshold: S) -> Phase {
    match (xi_k >= threshold, xi_c >= threshold) {
        (false, false) => Phase::LkLc,
        (false, true) => Phase::LkHc,
        (true, false) => Phase::HkLc,
        (true, true) => Phase::HkHc,
    }
}

/// Whether a severity marks a permanent crisis.
pub fn permanent<S: Scalar>(xi: S) -> bool {
    xi > cast(PERMANENT_THRESHOLD)
}

/// Spell durations of low-consumption (c < c0) and high-consumption runs.
/// Runs cut off by either end of the trajectory are listed separately and
/// excluded from the means, which are absent when no interior run exists.
#[derive(Debug, Clone, PartialEq)]
pub struct SpellStats<S> {
    pub spells_low: Vec<u64>,
    pub spells_high: Vec<u64>,
    pub truncated_low: Vec<u64>,
    pub truncated_high: Vec<u64>,
    pub t_low_mean: Option<S>,
    pub t_high_mean: Option<S>,
}

fn mean_of<S: Scalar>(xs: &[u64]) -> Option<S> {
    if xs.is_empty() {
        None
    } else {
        let sum: u64 = xs.iter().sum();
        Some(cast::<S>(sum as f64) / cast(xs.len() as f64))
    }
}

/// Decompose the trajectory into maximal low/high runs against `c0`.
pub fn spell_stats<S: Scalar>(states: &[EconomyState<S>], c0: S) -> SpellStats<S> {
    let mut stats = SpellStats {
        spells_low: Vec::new(),
        spells_high: Vec::new(),
        truncated_low: Vec::new(),
        truncated_high: Vec::new(),
        t_low_mean: None,
        t_high_mean: None,
    };
    if states.is_empty() {
        return stats;
    }
    let mut record = |low: bool, len: u64, interior: bool| {
        let bucket = match (low, interior) {
            (true, true) => &mut stats.spells_low,
            (true, false) => &mut stats.truncated_low,
            (false, true) => &mut stats.spells_high,
            (false, false) => &mut stats.truncated_high,
        };
        bucket.push(len);
    };
    let mut run_low = states[0].c < c0;
    let mut run_len = 1u64;
    let mut run_starts_at_boundary = true;
    for s in &states[1..] {
        let low = s.c < c0;
        if low == run_low {
            run_len += 1;
        } else {
            record(run_low, run_len, !run_starts_at_boundary);
            run_low = low;
            run_len = 1;
            run_starts_at_boundary = false;
        }
    }
    // The final run always touches the right boundary.
    record(run_low, run_len, false);
    stats.t_low_mean = mean_of(&stats.spells_low);
    stats.t_high_mean = mean_of(&stats.spells_high);
    stats
}

/// Uniform-bin histogram over the sample range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<S> {
    pub lo: S,
    pub hi: S,
    pub counts: Vec<u64>,
}

/// Bin `series` into `bins` uniform bins spanning [min, max]. A constant
/// series collapses into the first bin.
pub fn histogram<S: Scalar>(series: &[S], bins: usize) -> Result<Histogram<S>, IndicatorError> {
    if series.is_empty() {
        return Err(IndicatorError::EmptySeries);
    }
    if bins < 2 {
        return Err(IndicatorError::TooFewBins { bins });
    }
    let mut lo = series[0];
    let mut hi = series[0];
    for &x in series {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let mut counts = vec![0u64; bins];
    let width = hi - lo;
    let nbins = cast::<S>(bins as f64);
    for &x in series {
        let idx = if width > S::zero() {
            let raw = ((x - lo) / width * nbins).floor();
            raw.to_usize().unwrap_or(0).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(Histogram { lo, hi, counts })
}

impl<S: Scalar> Histogram<S> {
    /// Total number of binned samples.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bimodality heuristic: smooth the counts with a 3-bin moving
    /// average, find local maxima (plateaus count once; ends count when
    /// they dominate their inner neighbour), and split the mass at the
    /// minima between consecutive maxima. The distribution is bimodal
    /// when at least two modes each carry at least [`PEAK_MASS_FLOOR`]
    /// (2.5%) of the mass.
    pub fn bimodal(&self) -> bool {
        let n = self.counts.len();
        let total = self.total();
        if n < 3 || total == 0 {
            return false;
        }
        let smoothed: Vec<f64> = (0..n)
            .map(|i| {
                let a = i.saturating_sub(1);
                let b = (i + 1).min(n - 1);
                let window = &self.counts[a..=b];
                window.iter().sum::<u64>() as f64 / window.len() as f64
            })
            .collect();

        // Plateau-aware local maxima of the smoothed profile.
        let mut peaks: Vec<usize> = Vec::new(); // representative index per peak
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && smoothed[j + 1] == smoothed[i] {
                j += 1;
            }
            let left_ok = i == 0 || smoothed[i - 1] < smoothed[i];
            let right_ok = j == n - 1 || smoothed[j + 1] < smoothed[j];
            if left_ok && right_ok && smoothed[i] > 0.0 && !(i == 0 && j == n - 1) {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        }
        if peaks.len() < 2 {
            return false;
        }

        // Split the raw mass at the deepest point between adjacent peaks.
        let mut boundaries = vec![0usize];
        for pair in peaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let valley = (a..=b)
                .min_by(|&x, &y| smoothed[x].partial_cmp(&smoothed[y]).unwrap())
                .unwrap();
            boundaries.push(valley);
        }
        boundaries.push(n);

        let floor = PEAK_MASS_FLOOR * total as f64;
        let strong = boundaries
            .windows(2)
            .filter(|seg| {
                let mass: u64 = self.counts[seg[0]..seg[1]].iter().sum();
                mass as f64 >= floor
            })
            .count();
        strong >= 2
    }
}

/// Write a histogram as `bin_lo,bin_hi,count` CSV rows.
pub fn write_histogram_csv<S: Scalar, W: Write>(
    hist: &Histogram<S>,
    out: &mut W,
) -> io::Result<()> {
    writeln!(out, "bin_lo,bin_hi,count")?;
    let bins = hist.counts.len();
    let width = (hist.hi - hist.lo) / cast(bins as f64);
    for (i, count) in hist.counts.iter().enumerate() {
        let lo = hist.lo + width * cast(i as f64);
        let hi = if i + 1 == bins {
            hist.hi
        } else {
            hist.lo + width * cast((i + 1) as f64)
        };
        writeln!(out, "{lo},{hi},{count}")?;
    }
    Ok(())
}

/// Full per-trajectory crisis diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CrisisReport<S> {
    pub xi_c: S,
    pub xi_k: S,
    pub mean_sharpe: S,
    pub spells_low: Vec<u64>,
    pub spells_high: Vec<u64>,
    pub truncated_low: Vec<u64>,
    pub truncated_high: Vec<u64>,
    pub t_low_mean: Option<S>,
    pub t_high_mean: Option<S>,
    pub hist_c: Histogram<S>,
    pub hist_n: Histogram<S>,
    pub hist_sharpe: Histogram<S>,
    pub phase: Phase,
    pub permanent_c: bool,
    pub permanent_k: bool,
}

impl<S: Scalar> CrisisReport<S> {
    /// Evaluate all indicators over recorded states with `bins` histogram
    /// bins.
    pub fn from_states_binned(
        states: &[EconomyState<S>],
        p: &ModelParams<S>,
        bins: usize,
    ) -> Result<Self, IndicatorError> {
        let xi_c = xi_c(states, p.c0)?;
        let xi_k = xi_k(states)?;
        let spells = spell_stats(states, p.c0);
        let c: Vec<S> = states.iter().map(|s| s.c).collect();
        let n: Vec<S> = states.iter().map(|s| s.n).collect();
        let sharpe: Vec<S> = states.iter().map(|s| s.sharpe).collect();
        let mean_sharpe = sharpe.iter().fold(S::zero(), |a, &x| a + x) / cast(states.len() as f64);
        Ok(CrisisReport {
            xi_c,
            xi_k,
            mean_sharpe,
            spells_low: spells.spells_low,
            spells_high: spells.spells_high,
            truncated_low: spells.truncated_low,
            truncated_high: spells.truncated_high,
            t_low_mean: spells.t_low_mean,
            t_high_mean: spells.t_high_mean,
            hist_c: histogram(&c, bins)?,
            hist_n: histogram(&n, bins)?,
            hist_sharpe: histogram(&sharpe, bins)?,
            phase: classify_phase(xi_c, xi_k, p.xi_threshold),
            permanent_c: permanent(xi_c),
            permanent_k: permanent(xi_k),
        })
    }

    /// Evaluate with the default bin count.
    pub fn from_states(
        states: &[EconomyState<S>],
        p: &ModelParams<S>,
    ) -> Result<Self, IndicatorError> {
        Self::from_states_binned(states, p, HISTOGRAM_BINS)
    }

    /// Flat JSON-ready summary of this report.
    pub fn summary(&self) -> RunSummary {
        let f = |x: S| x.to_f64().unwrap_or(f64::NAN);
        RunSummary {
            xi_c: f(self.xi_c),
            xi_k: f(self.xi_k),
            phase: self.phase.to_string(),
            mean_sharpe: f(self.mean_sharpe),
            t_low_mean: self.t_low_mean.map(f),
            t_high_mean: self.t_high_mean.map(f),
            n_spells: self.spells_low.len(),
            bimodal_c: self.hist_c.bimodal(),
            bimodal_sharpe: self.hist_sharpe.bimodal(),
        }
    }
}

/// Per-run JSON summary. `n_spells` counts interior consumption-crisis
/// spells; the mean durations are null when no interior spell exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub xi_c: f64,
    pub xi_k: f64,
    pub phase: String,
    pub mean_sharpe: f64,
    pub t_low_mean: Option<f64>,
    pub t_high_mean: Option<f64>,
    pub n_spells: usize,
    pub bimodal_c: bool,
    #[serde(rename = "bimodal_S")]
    pub bimodal_sharpe: bool,
}

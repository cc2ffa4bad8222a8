//! Period-by-period dynamics of the economy.
//!
//! One period applies, in order:
//!   1. productivity shock z_t
//!   2. confidence C_t from last period's consumption, hence G_t
//!   3. allocation F_t from sentiment (Sharpe through q_{t-1})
//!   4. capital formation and the within-period equilibrium
//!   5. rent multiplier xi_t, realised rent q_t = q*_t xi_t
//!   6. Sharpe EMA update with q_t
//!   7. bond purchase b_t
//!   8. accounting diagnostics
//!
//! Income follows I_t = w_t n_t + b_{t-1}/(1+pi) + q_{t-1} k_{t-1}/(1+pi);
//! capital follows k_t = (1-delta) k_{t-1} + F_t (1-G_t) I_t. In
//! `Simultaneous` mode the pair (k_t, I_t) is closed by a damped fixed
//! point; in `Lagged` mode capital is formed from I_{t-1} and the
//! equilibrium solved once.

use std::io::{self, Write};

use thiserror::Error;

use crate::behavior::{self, SharpeState};
use crate::equilibrium::{self, EquilibriumError};
use crate::params::{CouplingMode, ModelParams, ParamsError};
use crate::scalar::{cast, Scalar};
use crate::stochastic::ShockStreams;

/// Relative tolerance of the simultaneous capital fixed point.
pub const FP_REL_TOL: f64 = 1e-10;
/// Iteration cap of the simultaneous capital fixed point.
pub const FP_MAX_ITER: u32 = 200;

/// Complete state of the economy after one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomyState<S> {
    /// Periods since initialization (burn-in included).
    pub t: u64,
    /// Log-productivity AR(1) level.
    pub frak_z: S,
    /// Productivity z = z0 exp(frak_z).
    pub z: S,
    /// Realised consumption c = z c~.
    pub c: S,
    /// Hours worked.
    pub n: S,
    /// Capital stock.
    pub k: S,
    /// Bond holdings bought this period.
    pub b: S,
    /// Wage w = z w~.
    pub w: S,
    /// Offered capital rent q* = z q~*.
    pub q_star: S,
    /// Realised capital rent q = q* xi.
    pub q: S,
    /// Confidence C in [-1, 1].
    pub confidence: S,
    /// Consumption rate G in [G_min, G_max].
    pub g: S,
    /// Capital allocation F in [F_min, F_max].
    pub f: S,
    /// Sentiment Sigma = nu S + (1 - nu) C.
    pub sigma_sent: S,
    /// EMA mean of realised rents.
    pub mu_q: S,
    /// EMA variance of realised rents.
    pub var_q: S,
    /// Sharpe ratio of capital.
    pub sharpe: S,
    /// Income I_t.
    pub income: S,
    /// Total investment budget (1 - G) I.
    pub i_total: S,
    /// Zero-profit diagnostic c - w n - q* k; rounding-level under
    /// constant returns.
    pub profit_residual: S,
}

/// Run metadata recorded alongside the states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunMeta {
    /// FNV-1a hash of the canonical config text.
    pub config_hash: u64,
    /// Master seed of the shock streams.
    pub seed: u64,
    /// Discarded warm-up periods.
    pub burn_in: u64,
}

/// Recorded run: `horizon` consecutive states after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub states: Vec<EconomyState<S>>,
    pub meta: RunMeta,
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error("capital fixed point did not converge within {iterations} iterations")]
    CouplingDiverged { iterations: u32 },
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("period {t}: {source}")]
    Step { t: u64, source: StepError },
}

/// CSV header of trajectory files.
pub const TRAJECTORY_HEADER: &str = "t,z,c,n,k,b,w,q_star,q,G,F,C,S,Sigma,income,profit_residual";

#[derive(Debug, Error)]
pub enum TrajectoryCsvError {
    #[error("trajectory header mismatch: expected `{TRAJECTORY_HEADER}`, got `{got}`")]
    Header { got: String },
    #[error("trajectory line {line}: {reason}")]
    Row { line: usize, reason: String },
}

/// Documented initial state: capital at the Leontief matching point of
/// G_max, consumption at its rescaled value, no bonds, neutral shocks and
/// Sharpe. The equilibrium at (k_0, G_max) seeds labour, wage, rent, and
/// income; the rent multiplier is not applied at initialization.
pub fn initial_state<S: Scalar>(p: &ModelParams<S>) -> Result<EconomyState<S>, StepError> {
    let one = S::one();
    let k = (p.g_max / (cast::<S>(2.0) * p.gamma)).sqrt();
    let c = p.z0 * k;
    let eq = equilibrium::solve_ces(k, p.g_max, p)?;
    let sharpe = SharpeState::neutral(p);
    let confidence = one;
    let g = behavior::consumption_rate(confidence, p);
    let decision = behavior::sentiment_and_allocation(sharpe.sharpe, confidence, p);
    let w = p.z0 * eq.w_tilde;
    let q_star = p.z0 * eq.q_star_tilde;
    let q = q_star;
    let income = w * eq.n + q * k / (one + p.pi);
    Ok(EconomyState {
        t: 0,
        frak_z: S::zero(),
        z: p.z0,
        c,
        n: eq.n,
        k,
        b: S::zero(),
        w,
        q_star,
        q,
        confidence,
        g,
        f: decision.f,
        sigma_sent: decision.sigma,
        mu_q: sharpe.mu_q,
        var_q: sharpe.var_q,
        sharpe: sharpe.sharpe,
        income,
        i_total: (one - g) * income,
        profit_residual: c - w * eq.n - q_star * k,
    })
}

/// Advance the economy one period.
pub fn step<S: Scalar>(
    prev: &EconomyState<S>,
    streams: &mut ShockStreams,
    p: &ModelParams<S>,
) -> Result<EconomyState<S>, StepError> {
    let one = S::one();
    let drawn = streams.step_productivity(prev.frak_z, p);
    let z = drawn.z;

    let confidence = behavior::confidence(prev.c, p);
    let g = behavior::consumption_rate(confidence, p);
    let decision = behavior::sentiment_and_allocation(prev.sharpe, confidence, p);
    let f = decision.f;

    let carry = (prev.b + prev.q * prev.k) / (one + p.pi);
    let invest_rate = f * (one - g);
    let base = (one - p.delta) * prev.k;

    let (k, eq, income) = match p.coupling_mode {
        CouplingMode::Lagged => {
            let k = base + invest_rate * prev.income;
            let eq = equilibrium::solve_ces(k, g, p)?;
            let income = z * eq.w_tilde * eq.n + carry;
            (k, eq, income)
        }
        CouplingMode::Simultaneous => {
            let mut k = base + invest_rate * prev.income;
            let mut eq = equilibrium::solve_ces(k, g, p)?;
            let mut income = z * eq.w_tilde * eq.n + carry;
            let mut prev_move = S::zero();
            let mut converged = false;
            for _ in 0..FP_MAX_ITER {
                let k_next = base + invest_rate * income;
                let shift = k_next - k;
                if shift.abs() <= cast::<S>(FP_REL_TOL) * k {
                    converged = true;
                    break;
                }
                // Halve the step when the iterate starts oscillating.
                k = if shift * prev_move < S::zero() {
                    (k + k_next) * cast::<S>(0.5)
                } else {
                    k_next
                };
                prev_move = shift;
                eq = equilibrium::solve_ces(k, g, p)?;
                income = z * eq.w_tilde * eq.n + carry;
            }
            if !converged {
                return Err(StepError::CouplingDiverged {
                    iterations: FP_MAX_ITER,
                });
            }
            (k, eq, income)
        }
    };

    let xi = streams.draw_risk(p.a);
    let c = z * eq.c_tilde;
    let n = eq.n;
    let w = z * eq.w_tilde;
    let q_star = z * eq.q_star_tilde;
    let q = q_star * xi;

    let sharpe = behavior::update_sharpe(
        &SharpeState {
            mu_q: prev.mu_q,
            var_q: prev.var_q,
            sharpe: prev.sharpe,
        },
        q,
        p,
    );

    let b = (one + p.r) * (one - f) * (one - g) * income;

    Ok(EconomyState {
        t: prev.t + 1,
        frak_z: drawn.frak_z,
        z,
        c,
        n,
        k,
        b,
        w,
        q_star,
        q,
        confidence,
        g,
        f,
        sigma_sent: decision.sigma,
        mu_q: sharpe.mu_q,
        var_q: sharpe.var_q,
        sharpe: sharpe.sharpe,
        income,
        i_total: (one - g) * income,
        profit_residual: c - w * n - q_star * k,
    })
}

/// Run one trajectory: burn-in, then `horizon` recorded periods.
pub fn run<S: Scalar>(p: &ModelParams<S>) -> Result<Trajectory<S>, EngineError> {
    run_seeded(p, 0, 0)
}

/// Run one trajectory as sweep cell `cell`, replica `replica`. A standalone
/// run is cell 0, replica 0.
pub fn run_seeded<S: Scalar>(
    p: &ModelParams<S>,
    cell: u64,
    replica: u64,
) -> Result<Trajectory<S>, EngineError> {
    p.validate()?;
    let mut streams = ShockStreams::for_cell(p.engine.seed, cell, replica);
    let mut state = initial_state(p).map_err(|source| EngineError::Step { t: 0, source })?;
    for _ in 0..p.engine.burn_in {
        state = step(&state, &mut streams, p).map_err(|source| EngineError::Step {
            t: state.t + 1,
            source,
        })?;
    }
    let mut states = Vec::with_capacity(p.engine.horizon as usize);
    for _ in 0..p.engine.horizon {
        state = step(&state, &mut streams, p).map_err(|source| EngineError::Step {
            t: state.t + 1,
            source,
        })?;
        states.push(state);
    }
    Ok(Trajectory {
        states,
        meta: RunMeta {
            config_hash: p.config_hash(),
            seed: p.engine.seed,
            burn_in: p.engine.burn_in,
        },
    })
}

/// Write a trajectory as CSV. Scalar formatting is shortest-round-trip, so
/// files preserve full precision and identical runs produce identical bytes.
pub fn write_trajectory_csv<S: Scalar, W: Write>(
    traj: &Trajectory<S>,
    out: &mut W,
) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for s in &traj.states {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.t,
            s.z,
            s.c,
            s.n,
            s.k,
            s.b,
            s.w,
            s.q_star,
            s.q,
            s.g,
            s.f,
            s.confidence,
            s.sharpe,
            s.sigma_sent,
            s.income,
            s.profit_residual
        )?;
    }
    Ok(())
}

/// Read states back from trajectory CSV. The EMA internals (mu_q, var_q)
/// are not part of the file format and come back zeroed; frak_z is
/// recovered from z. The result is suitable for indicator evaluation.
pub fn read_trajectory_csv<S: Scalar>(
    text: &str,
    p: &ModelParams<S>,
) -> Result<Vec<EconomyState<S>>, TrajectoryCsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRAJECTORY_HEADER => {}
        other => {
            return Err(TrajectoryCsvError::Header {
                got: other.map(|(_, h)| h.to_string()).unwrap_or_default(),
            })
        }
    }
    let mut states = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let row: Vec<&str> = line.split(',').collect();
        if row.len() != 16 {
            return Err(TrajectoryCsvError::Row {
                line: idx + 1,
                reason: format!("expected 16 columns, got {}", row.len()),
            });
        }
        let err = |reason: String| TrajectoryCsvError::Row {
            line: idx + 1,
            reason,
        };
        let t: u64 = row[0]
            .parse()
            .map_err(|_| err(format!("bad period index `{}`", row[0])))?;
        let mut v = [S::zero(); 15];
        for (slot, field) in v.iter_mut().zip(&row[1..]) {
            *slot = field
                .parse::<f64>()
                .ok()
                .and_then(S::from_f64)
                .ok_or_else(|| err(format!("bad number `{field}`")))?;
        }
        let [z, c, n, k, b, w, q_star, q, g, f, confidence, sharpe, sigma_sent, income, profit_residual] =
            v;
        states.push(EconomyState {
            t,
            frak_z: (z / p.z0).ln(),
            z,
            c,
            n,
            k,
            b,
            w,
            q_star,
            q,
            confidence,
            g,
            f,
            sigma_sent,
            mu_q: S::zero(),
            var_q: S::zero(),
            sharpe,
            income,
            i_total: (S::one() - g) * income,
            profit_residual,
        });
    }
    Ok(states)
}

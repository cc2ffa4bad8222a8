//! Shared helpers for the integration tests: an independent equilibrium
//! oracle (bisecting over labour rather than consumption), a straight-line
//! re-implementation of one dynamics step, and a streaming run that
//! computes crisis statistics without materialising the trajectory.

#![allow(dead_code)]

use bbcycle::dynamics::{self, EconomyState};
use bbcycle::params::{CouplingMode, ModelParams};
use bbcycle::stochastic::ShockStreams;

/// Equilibrium quantities produced by the brute-force oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleEq {
    pub c_tilde: f64,
    pub n: f64,
    pub w_tilde: f64,
    pub q_star_tilde: f64,
    pub utility: f64,
}

/// Brute-force equilibrium: bisect the labour-choice residual over n,
/// recovering consumption from the production function at each trial.
/// This is the transposed decomposition of the library solver (which
/// bisects over consumption and recovers labour), evaluated with plain
/// `powf` instead of log-space arithmetic, so the two implementations
/// share no algebra beyond the model itself.
pub fn oracle_equilibrium(k: f64, g: f64, p: &ModelParams<f64>) -> OracleEq {
    let alpha = p.alpha;
    let rho = p.rho;
    let gamma = p.gamma;
    let c_of_n =
        |n: f64| -> f64 { (alpha * k.powf(-rho) + (1.0 - alpha) * n.powf(-rho)).powf(-1.0 / rho) };
    let w_of = |n: f64, c: f64| -> f64 { (1.0 - alpha) * (c / n).powf(1.0 + rho) };
    let residual = |n: f64| -> f64 {
        let c = c_of_n(n);
        n * c - g / (2.0 * gamma) * w_of(n, c)
    };

    let mut lo = 1e-12_f64;
    let mut hi = 1.0_f64;
    let mut guard = 0;
    while residual(hi) < 0.0 {
        hi *= 2.0;
        guard += 1;
        assert!(guard < 200, "oracle failed to bracket at k={k}, g={g}");
    }
    assert!(
        residual(lo) < 0.0,
        "oracle lower bracket not negative at k={k}, g={g}"
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n = 0.5 * (lo + hi);
    let c = c_of_n(n);
    let w = w_of(n, c);
    let q = alpha * (c / k).powf(1.0 + rho);
    OracleEq {
        c_tilde: c,
        n,
        w_tilde: w,
        q_star_tilde: q,
        utility: g * c.ln() - gamma * n * n,
    }
}

/// Straight-line recomputation of one dynamics step, given the two shock
/// realisations of the period. Every behavioural and accounting formula
/// is written out directly; the equilibrium comes from the oracle above.
pub fn oracle_step(
    prev: &EconomyState<f64>,
    frak_z: f64,
    z: f64,
    xi: f64,
    p: &ModelParams<f64>,
) -> EconomyState<f64> {
    let confidence = (p.theta_c * (prev.c - p.c0)).tanh();
    let g = 0.5 * (p.g_max + p.g_min + (p.g_max - p.g_min) * confidence);
    let sigma = p.nu * prev.sharpe + (1.0 - p.nu) * confidence;
    let f = 0.5 * (p.f_max + p.f_min + (p.f_max - p.f_min) * (p.theta_k * sigma).tanh());

    let carry = (prev.b + prev.q * prev.k) / (1.0 + p.pi);
    let invest_rate = f * (1.0 - g);
    let base = (1.0 - p.delta) * prev.k;

    let (k, eq, income) = match p.coupling_mode {
        CouplingMode::Lagged => {
            let k = base + invest_rate * prev.income;
            let eq = oracle_equilibrium(k, g, p);
            let income = z * eq.w_tilde * eq.n + carry;
            (k, eq, income)
        }
        CouplingMode::Simultaneous => {
            let mut k = base + invest_rate * prev.income;
            let mut eq = oracle_equilibrium(k, g, p);
            let mut income = z * eq.w_tilde * eq.n + carry;
            let mut converged = false;
            for _ in 0..10_000 {
                let k_next = base + invest_rate * income;
                if (k_next - k).abs() <= 1e-13 * k {
                    converged = true;
                    break;
                }
                k = 0.5 * (k + k_next);
                eq = oracle_equilibrium(k, g, p);
                income = z * eq.w_tilde * eq.n + carry;
            }
            assert!(converged, "oracle coupling iteration did not settle");
            (k, eq, income)
        }
    };

    let c = z * eq.c_tilde;
    let w = z * eq.w_tilde;
    let q_star = z * eq.q_star_tilde;
    let q = q_star * xi;

    let mu_q = p.lambda * prev.mu_q + (1.0 - p.lambda) * q;
    let dev = q - mu_q;
    let var_q = p.lambda * prev.var_q + (1.0 - p.lambda) * dev * dev;
    let sd = var_q.sqrt();
    let excess = mu_q - p.r - p.delta;
    let sharpe = if sd < 1e-8 {
        if excess == 0.0 {
            0.0
        } else {
            excess.signum() * 10.0
        }
    } else {
        p.n_scale * excess / sd
    };

    let b = (1.0 + p.r) * (1.0 - f) * (1.0 - g) * income;

    EconomyState {
        t: prev.t + 1,
        frak_z,
        z,
        c,
        n: eq.n,
        k,
        b,
        w,
        q_star,
        q,
        confidence,
        g,
        f,
        sigma_sent: sigma,
        mu_q,
        var_q,
        sharpe,
        income,
        i_total: (1.0 - g) * income,
        profit_residual: c - w * eq.n - q_star * k,
    }
}

/// Crisis statistics accumulated without storing the trajectory.
#[derive(Debug, Clone)]
pub struct StreamedStats {
    pub xi_c: f64,
    pub xi_k: f64,
    pub mean_sharpe: f64,
    /// Mean duration of interior low-consumption spells, if any closed.
    pub t_low_mean: Option<f64>,
    /// Mean duration of interior high-consumption spells, if any closed.
    pub t_high_mean: Option<f64>,
    pub spells_low: usize,
    pub spells_high: usize,
    /// Periods where an accounting identity missed its tolerance.
    pub invariant_violations: u64,
}

/// Run `horizon` recorded periods after `burn_in` discarded ones, for the
/// given sweep coordinates, folding crisis statistics and accounting
/// checks on the fly. Equivalent to `dynamics::run_seeded` followed by
/// the indicator pass, but with O(1) memory, for multi-million-period
/// arms of the acceptance suite.
pub fn run_streamed(
    p: &ModelParams<f64>,
    cell: u64,
    replica: u64,
) -> Result<StreamedStats, dynamics::EngineError> {
    p.validate().map_err(dynamics::EngineError::from)?;
    let mut streams = ShockStreams::for_cell(p.engine.seed, cell, replica);
    let mut state = dynamics::initial_state(p)
        .map_err(|source| dynamics::EngineError::Step { t: 0, source })?;
    for _ in 0..p.engine.burn_in {
        state = dynamics::step(&state, &mut streams, p).map_err(|source| {
            dynamics::EngineError::Step {
                t: state.t + 1,
                source,
            }
        })?;
    }

    let c0 = p.c0;
    let mut xi_c_sum = 0.0_f64;
    let mut xi_k_sum = 0.0_f64;
    let mut sharpe_sum = 0.0_f64;
    let mut violations = 0_u64;

    // Interior-spell bookkeeping: the first and last runs touch the
    // window edges and are discarded, matching indicators::spell_stats.
    let mut run_len = 0_u64;
    let mut run_low = false;
    let mut saw_transition = false;
    let mut low_sum = 0_u64;
    let mut low_count = 0_usize;
    let mut high_sum = 0_u64;
    let mut high_count = 0_usize;

    for t in 0..p.engine.horizon {
        let prev = state;
        state = dynamics::step(&prev, &mut streams, p).map_err(|source| {
            dynamics::EngineError::Step {
                t: prev.t + 1,
                source,
            }
        })?;

        if state.c < c0 {
            xi_c_sum += 1.0 - state.c / c0;
        }
        if state.k < state.n {
            xi_k_sum += 1.0 - state.k / state.n;
        }
        sharpe_sum += state.sharpe;

        // Accounting identities, checked against the previous state.
        let capital_law = (1.0 - p.delta) * prev.k + state.f * (1.0 - state.g) * state.income;
        let bond_law = (1.0 + p.r) * (1.0 - state.f) * (1.0 - state.g) * state.income;
        let carry = (prev.b + prev.q * prev.k) / (1.0 + p.pi);
        let income_id = state.w * state.n + carry;
        let ok = (state.k - capital_law).abs() <= 1e-10 * state.k.max(1.0)
            && (state.b - bond_law).abs() <= 1e-12 * state.b.abs().max(1.0)
            && (state.income - income_id).abs() <= 1e-12 * state.income.abs().max(1.0)
            && state.q >= 0.0
            && state.q <= state.q_star;
        if !ok {
            violations += 1;
        }

        let low = state.c < c0;
        if t == 0 {
            run_low = low;
            run_len = 1;
        } else if low == run_low {
            run_len += 1;
        } else {
            if saw_transition {
                if run_low {
                    low_sum += run_len;
                    low_count += 1;
                } else {
                    high_sum += run_len;
                    high_count += 1;
                }
            }
            saw_transition = true;
            run_low = low;
            run_len = 1;
        }
    }
    // The final open run is truncated by the window edge and dropped.

    let horizon = p.engine.horizon as f64;
    Ok(StreamedStats {
        xi_c: xi_c_sum / horizon,
        xi_k: xi_k_sum / horizon,
        mean_sharpe: sharpe_sum / horizon,
        t_low_mean: (low_count > 0).then(|| low_sum as f64 / low_count as f64),
        t_high_mean: (high_count > 0).then(|| high_sum as f64 / high_count as f64),
        spells_low: low_count,
        spells_high: high_count,
        invariant_violations: violations,
    })
}

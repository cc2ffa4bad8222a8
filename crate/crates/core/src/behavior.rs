//! Behavioural feedback rules: confidence, consumption rate, the realised
//! Sharpe ratio of capital, and the investment allocation.

use crate::params::ModelParams;
use crate::scalar::{cast, Scalar};

/// Variance floor below which the Sharpe ratio saturates.
pub fn sigma_floor<S: Scalar>() -> S {
    cast(1e-8)
}

/// Saturation value of the Sharpe ratio when sigma underflows the floor.
pub fn sharpe_cap<S: Scalar>() -> S {
    cast(10.0)
}

/// Confidence C = tanh(theta_c (c_prev - c0)), in [-1, 1].
pub fn confidence<S: Scalar>(c_prev: S, p: &ModelParams<S>) -> S {
    (p.theta_c * (c_prev - p.c0)).tanh()
}

/// Consumption rate G = (G_min + G_max + (G_max - G_min) C) / 2,
/// in [G_min, G_max] and non-decreasing in C.
pub fn consumption_rate<S: Scalar>(confidence: S, p: &ModelParams<S>) -> S {
    (p.g_min + p.g_max + (p.g_max - p.g_min) * confidence) * cast::<S>(0.5)
}

/// Exponential moving estimate of the realised rent and the Sharpe ratio
/// built from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpeState<S> {
    /// EMA of realised rents q.
    pub mu_q: S,
    /// EMA variance of realised rents, updated against the new mean.
    pub var_q: S,
    /// S = n_scale (mu - r - delta) / sigma, saturated at +-sharpe_cap
    /// when sigma falls below the floor.
    pub sharpe: S,
}

impl<S: Scalar> SharpeState<S> {
    /// Neutral state used at initialization: the excess return is zero and
    /// the variance sits exactly at the floor, so S = 0.
    pub fn neutral(p: &ModelParams<S>) -> Self {
        let floor = sigma_floor::<S>();
        SharpeState {
            mu_q: p.r + p.delta,
            var_q: floor * floor,
            sharpe: S::zero(),
        }
    }
}

/// Fold one realised rent into the EMA state:
///   mu'  = lambda mu + (1 - lambda) q
///   var' = lambda var + (1 - lambda) (q - mu')^2
pub fn update_sharpe<S: Scalar>(prev: &SharpeState<S>, q: S, p: &ModelParams<S>) -> SharpeState<S> {
    let one = S::one();
    let mu_q = p.lambda * prev.mu_q + (one - p.lambda) * q;
    let dev = q - mu_q;
    let var_q = p.lambda * prev.var_q + (one - p.lambda) * dev * dev;
    let sigma = var_q.sqrt();
    let excess = mu_q - p.r - p.delta;
    let sharpe = if sigma < sigma_floor::<S>() {
        if excess.is_zero() {
            S::zero()
        } else {
            excess.signum() * sharpe_cap::<S>()
        }
    } else {
        p.n_scale * excess / sigma
    };
    SharpeState {
        mu_q,
        var_q,
        sharpe,
    }
}

/// Sentiment Sigma = nu S + (1 - nu) C and the capital allocation
/// F = (F_min + F_max + (F_max - F_min) tanh(theta_k Sigma)) / 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentimentDecision<S> {
    pub sigma: S,
    pub f: S,
}

pub fn sentiment_and_allocation<S: Scalar>(
    sharpe: S,
    confidence: S,
    p: &ModelParams<S>,
) -> SentimentDecision<S> {
    let sigma = p.nu * sharpe + (S::one() - p.nu) * confidence;
    let f = (p.f_min + p.f_max + (p.f_max - p.f_min) * (p.theta_k * sigma).tanh()) * cast::<S>(0.5);
    SentimentDecision { sigma, f }
}

//! Shock streams: AR(1) log-productivity and the power-law rent multiplier.
//!
//! Determinism contract: every random number comes from one of two ChaCha8
//! streams whose 256-bit seeds are derived from
//! `(master_seed, cell, replica, stream_tag)` by a splitmix64 chain. The
//! same tuple always yields the same byte-for-byte draw sequence; sweep
//! cells and replicas get independent streams without any shared state.
//! Normal variates use `rand_distr::StandardNormal` (ziggurat), a fixed
//! pure-arithmetic transform of the stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::params::ModelParams;
use crate::scalar::Scalar;

/// Stream tag of the productivity noise.
pub const STREAM_PRODUCTIVITY: u64 = 1;
/// Stream tag of the rent-multiplier noise.
pub const STREAM_RISK: u64 = 2;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer: bijective 64-bit avalanche mix.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a 256-bit ChaCha seed from the seeding tuple.
pub fn stream_seed(master_seed: u64, cell: u64, replica: u64, tag: u64) -> [u8; 32] {
    let mut state = master_seed;
    for field in [cell, replica, tag] {
        state = mix64(state.wrapping_add(GOLDEN).wrapping_add(field));
    }
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    out
}

/// One productivity update: the AR(1) log level and the rescaled level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductivityDraw<S> {
    /// frak_z_t = eta frak_z_{t-1} + sqrt(1 - eta^2) eps, eps ~ N(0, sigma_z^2).
    pub frak_z: S,
    /// z_t = z0 exp(frak_z_t).
    pub z: S,
}

/// The two independent shock streams of one simulation run.
#[derive(Debug, Clone)]
pub struct ShockStreams {
    productivity: ChaCha8Rng,
    risk: ChaCha8Rng,
}

impl ShockStreams {
    /// Streams of a standalone run (sweep cell 0, replica 0).
    pub fn new(master_seed: u64) -> Self {
        Self::for_cell(master_seed, 0, 0)
    }

    /// Streams of one sweep cell replica.
    pub fn for_cell(master_seed: u64, cell: u64, replica: u64) -> Self {
        ShockStreams {
            productivity: ChaCha8Rng::from_seed(stream_seed(
                master_seed,
                cell,
                replica,
                STREAM_PRODUCTIVITY,
            )),
            risk: ChaCha8Rng::from_seed(stream_seed(master_seed, cell, replica, STREAM_RISK)),
        }
    }

    /// Advance log-productivity one period. A normal variate is consumed
    /// even when `sigma_z = 0`, so stream positions do not depend on
    /// parameter values.
    pub fn step_productivity<S: Scalar>(
        &mut self,
        frak_z_prev: S,
        p: &ModelParams<S>,
    ) -> ProductivityDraw<S> {
        let eps = S::standard_normal(&mut self.productivity) * p.sigma_z;
        let frak_z = ar1_next(frak_z_prev, eps, p.eta);
        ProductivityDraw {
            frak_z,
            z: p.z0 * frak_z.exp(),
        }
    }

    /// Draw the rent multiplier xi in [0, 1] with density a xi^(a-1).
    pub fn draw_risk<S: Scalar>(&mut self, a: S) -> S {
        risk_quantile(S::unit_uniform_open(&mut self.risk), a)
    }
}

/// AR(1) update with stationary variance equal to Var(eps):
/// frak_z = eta frak_z_prev + sqrt(1 - eta^2) eps.
pub fn ar1_next<S: Scalar>(frak_z_prev: S, eps: S, eta: S) -> S {
    eta * frak_z_prev + (S::one() - eta * eta).sqrt() * eps
}

/// Inverse CDF of the rent multiplier: xi = u^(1/a) for u in (0, 1].
/// `a = inf` gives exponent zero, hence xi = 1 exactly: risk disabled.
pub fn risk_quantile<S: Scalar>(u: S, a: S) -> S {
    u.powf(a.recip())
}

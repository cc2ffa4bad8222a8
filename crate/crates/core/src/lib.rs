//! Deterministic simulator of a behavioural business-cycle economy in
//! which confidence feeds back on the economy's own past performance.
//!
//! A representative household splits income between consumption, capital
//! investment, and bonds. Production is CES in capital and labour; the
//! within-period equilibrium fixes rescaled consumption, hours, the wage,
//! and the capital rent. Two behavioural couplings close the loop:
//! confidence (driven by past consumption) sets the consumption rate, and
//! sentiment (a blend of a Sharpe-ratio estimate of capital returns and
//! confidence) sets the share of savings invested in capital. Firms pay
//! only a stochastic fraction of the promised rent, so realised returns
//! carry risk even at fixed productivity.
//!
//! Depending on the depreciation rate and the confidence threshold, the
//! long run is calm, or punctuated by endogenous crises in consumption
//! and/or capital — the four phases measured by [`indicators`] and mapped
//! by [`sweep`].
//!
//! Everything is deterministic given (config, seed): shock streams are
//! counter-derived per (cell, replica, stream), sweeps are reproducible
//! at any worker count, and emitted files carry no timestamps.
//!
//! ```
//! use bbcycle::{dynamics, indicators, params::ModelParams};
//!
//! let mut p = ModelParams::<f64>::defaults();
//! p.engine.horizon = 1_000;
//! p.engine.burn_in = 100;
//! let traj = dynamics::run(&p).unwrap();
//! let report = indicators::CrisisReport::from_states(&traj.states, &p).unwrap();
//! println!("{} (Xi_c = {:.3e})", report.phase, report.xi_c);
//! ```
//!
//! The solver core is generic over the scalar type through [`Scalar`]
//! (both `f64` and `f32` are wired up); the `*64` aliases below cover the
//! common case.

pub mod behavior;
pub mod dynamics;
pub mod equilibrium;
pub mod indicators;
pub mod params;
pub mod scalar;
pub mod stochastic;
pub mod sweep;

pub use scalar::Scalar;

/// Double-precision model parameters.
pub type ModelParams64 = params::ModelParams<f64>;
/// Double-precision economy state.
pub type EconomyState64 = dynamics::EconomyState<f64>;
/// Double-precision trajectory.
pub type Trajectory64 = dynamics::Trajectory<f64>;
/// Double-precision equilibrium outcome.
pub type EquilibriumOutcome64 = equilibrium::EquilibriumOutcome<f64>;
/// Double-precision crisis report.
pub type CrisisReport64 = indicators::CrisisReport<f64>;
/// Double-precision sweep plan.
pub type SweepPlan64 = sweep::SweepPlan<f64>;

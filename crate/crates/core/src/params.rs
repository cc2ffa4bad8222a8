//! Model parameters, validation, and the plain-text config format.
//!
//! The config format is one `key = value` per line with `#` comments.
//! Keys use the ASCII names listed in [`ModelParams::KEYS`]; every key is
//! required when loading a full config. [`ModelParams::save`] emits a config
//! that [`ModelParams::load`] reads back to an identical parameter set.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::{cast, Scalar};

/// How capital formation couples to the within-period equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// Capital, income, and the equilibrium are solved together each period
    /// by a damped fixed-point iteration.
    Simultaneous,
    /// Capital is formed from the previous period's income; the equilibrium
    /// is then solved once.
    Lagged,
}

impl FromStr for CouplingMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "simultaneous" => Ok(CouplingMode::Simultaneous),
            "lagged" => Ok(CouplingMode::Lagged),
            _ => Err(()),
        }
    }
}

impl fmt::Display for CouplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CouplingMode::Simultaneous => write!(f, "simultaneous"),
            CouplingMode::Lagged => write!(f, "lagged"),
        }
    }
}

/// Root-finder settings for the within-period equilibrium solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<S> {
    /// Absolute tolerance on rescaled consumption.
    pub tol: S,
    /// Iteration cap before the solver reports failure.
    pub max_iter: u32,
}

/// Horizon, burn-in, and seeding of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineSettings {
    /// Recorded periods per run (after burn-in).
    pub horizon: u64,
    /// Discarded warm-up periods.
    pub burn_in: u64,
    /// Master seed; all shock streams derive from it.
    pub seed: u64,
}

/// Full parameter set of the model, solver, and engine.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    /// Disutility-of-labour coefficient in U = G ln c - gamma n^2.
    pub gamma: S,
    /// Capital share of the CES production function.
    pub alpha: S,
    /// CES curvature; substitution elasticity is 1/(1+rho).
    pub rho: S,
    /// Baseline productivity level; z = z0 exp(frak_z).
    pub z0: S,
    /// AR(1) memory of log-productivity.
    pub eta: S,
    /// Stationary standard deviation of log-productivity.
    pub sigma_z: S,
    /// Capital depreciation rate per period.
    pub delta: S,
    /// Bond interest rate per period.
    pub r: S,
    /// Inflation rate discounting carried-over nominal income.
    pub pi: S,
    /// Risk-shape exponent of the rent multiplier density a xi^(a-1).
    /// `a = inf` disables risk (xi = 1 exactly).
    pub a: S,
    /// Confidence threshold on realised consumption.
    pub c0: S,
    /// Steepness of the confidence response tanh(theta_c (c - c0)).
    pub theta_c: S,
    /// Lower bound of the consumption rate G.
    pub g_min: S,
    /// Upper bound of the consumption rate G.
    pub g_max: S,
    /// EMA memory of the realised-rent mean and variance.
    pub lambda: S,
    /// Weight of the Sharpe signal (vs confidence) in investment sentiment.
    pub nu: S,
    /// Prefactor of the Sharpe ratio.
    pub n_scale: S,
    /// Steepness of the investment allocation tanh(theta_k Sigma).
    pub theta_k: S,
    /// Lower bound of the capital allocation F.
    pub f_min: S,
    /// Upper bound of the capital allocation F.
    pub f_max: S,
    /// Crisis-indicator threshold separating L and H phases.
    pub xi_threshold: S,
    pub coupling_mode: CouplingMode,
    pub solver: SolverSettings<S>,
    pub engine: EngineSettings,
}

/// Errors from config parsing, overrides, or validation.
#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown parameter `{key}`")]
    UnknownKey { key: String },
    #[error("parameter `{key}`: cannot parse `{value}` as {kind}")]
    BadValue {
        key: String,
        value: String,
        kind: &'static str,
    },
    #[error("missing required parameter `{key}`")]
    MissingKey { key: &'static str },
    #[error("parameter `{key}` = {value} out of range: requires {requirement}")]
    OutOfRange {
        key: &'static str,
        value: String,
        requirement: &'static str,
    },
}

/// A model timescale in periods; infinite when the underlying rate is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Timescale<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> Timescale<S> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Timescale::Infinite)
    }

    /// Finite value, or `None` for the infinite sentinel.
    pub fn finite(&self) -> Option<S> {
        match self {
            Timescale::Finite(v) => Some(*v),
            Timescale::Infinite => None,
        }
    }
}

impl<S: Scalar> PartialOrd for Timescale<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use Timescale::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Finite(_), Infinite) => Some(std::cmp::Ordering::Less),
            (Infinite, Finite(_)) => Some(std::cmp::Ordering::Greater),
            (Infinite, Infinite) => Some(std::cmp::Ordering::Equal),
        }
    }
}

impl<S: Scalar> fmt::Display for Timescale<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Timescale::Finite(v) => write!(f, "{v}"),
            Timescale::Infinite => write!(f, "inf"),
        }
    }
}

/// Memory, shock, and depreciation timescales implied by a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timescales<S> {
    /// T_lambda = 1/|ln lambda|: Sharpe EMA memory.
    pub lambda: Timescale<S>,
    /// T_eta = 1/|ln eta|: productivity shock persistence.
    pub eta: Timescale<S>,
    /// T_delta = 1/|ln(1 - delta)|: capital lifetime; infinite when delta = 0.
    pub delta: Timescale<S>,
}

impl<S: Scalar> ModelParams<S> {
    /// Config keys in canonical (save) order.
    pub const KEYS: &'static [&'static str] = &[
        "gamma",
        "alpha",
        "rho",
        "z0",
        "eta",
        "sigma_z",
        "delta",
        "r",
        "pi",
        "a",
        "c0",
        "theta_c",
        "g_min",
        "g_max",
        "lambda",
        "nu",
        "n_scale",
        "theta_k",
        "f_min",
        "f_max",
        "xi_threshold",
        "coupling_mode",
        "solver_tol",
        "solver_max_iter",
        "horizon",
        "burn_in",
        "seed",
    ];

    /// Baseline parameter set.
    pub fn defaults() -> Self {
        ModelParams {
            gamma: cast(1.0),
            alpha: cast(1.0 / 3.0),
            rho: cast(7.0),
            z0: cast(0.05),
            eta: cast(0.5),
            sigma_z: cast(0.15),
            delta: cast(0.005),
            r: cast(0.0015),
            pi: cast(0.001),
            a: cast(15.0),
            c0: cast(0.017),
            theta_c: cast(300.0),
            g_min: cast(0.05),
            g_max: cast(0.95),
            lambda: cast(0.95),
            nu: cast(1.0),
            n_scale: cast(0.25),
            theta_k: cast(15.0),
            f_min: cast(0.0),
            f_max: cast(1.0),
            xi_threshold: cast(0.01),
            coupling_mode: CouplingMode::Simultaneous,
            solver: SolverSettings {
                tol: cast(1e-12),
                max_iter: 200,
            },
            engine: EngineSettings {
                horizon: 200_000,
                burn_in: 2_000,
                seed: 42,
            },
        }
    }

    /// Check every range constraint; the error names the offending field.
    pub fn validate(&self) -> Result<(), ParamsError> {
        fn req<S: Scalar>(
            key: &'static str,
            value: S,
            ok: bool,
            requirement: &'static str,
        ) -> Result<(), ParamsError> {
            if ok {
                Ok(())
            } else {
                Err(ParamsError::OutOfRange {
                    key,
                    value: value.to_string(),
                    requirement,
                })
            }
        }

        let z = S::zero();
        let one = S::one();
        req(
            "gamma",
            self.gamma,
            self.gamma.is_finite() && self.gamma > z,
            "finite and > 0",
        )?;
        req(
            "alpha",
            self.alpha,
            self.alpha > z && self.alpha < one,
            "0 < alpha < 1",
        )?;
        req(
            "rho",
            self.rho,
            self.rho.is_finite() && self.rho > z,
            "finite and > 0",
        )?;
        req(
            "z0",
            self.z0,
            self.z0.is_finite() && self.z0 > z,
            "finite and > 0",
        )?;
        req(
            "eta",
            self.eta,
            self.eta >= z && self.eta < one,
            "0 <= eta < 1",
        )?;
        req(
            "sigma_z",
            self.sigma_z,
            self.sigma_z.is_finite() && self.sigma_z >= z,
            "finite and >= 0",
        )?;
        req(
            "delta",
            self.delta,
            self.delta >= z && self.delta < one,
            "0 <= delta < 1",
        )?;
        req(
            "r",
            self.r,
            self.r.is_finite() && self.r > -one,
            "finite and > -1",
        )?;
        req(
            "pi",
            self.pi,
            self.pi.is_finite() && self.pi > -one,
            "finite and > -1",
        )?;
        // a = inf is allowed and turns the rent multiplier off (xi = 1).
        req("a", self.a, self.a > z, "> 0 (inf allowed)")?;
        req(
            "c0",
            self.c0,
            self.c0.is_finite() && self.c0 >= z,
            "finite and >= 0",
        )?;
        req(
            "theta_c",
            self.theta_c,
            self.theta_c.is_finite() && self.theta_c >= z,
            "finite and >= 0",
        )?;
        req(
            "g_min",
            self.g_min,
            self.g_min > z && self.g_min <= self.g_max,
            "0 < g_min <= g_max",
        )?;
        req("g_max", self.g_max, self.g_max < one, "g_max < 1")?;
        req(
            "lambda",
            self.lambda,
            self.lambda > z && self.lambda < one,
            "0 < lambda < 1",
        )?;
        req(
            "nu",
            self.nu,
            self.nu >= z && self.nu <= one,
            "0 <= nu <= 1",
        )?;
        req(
            "n_scale",
            self.n_scale,
            self.n_scale.is_finite() && self.n_scale >= z,
            "finite and >= 0",
        )?;
        req(
            "theta_k",
            self.theta_k,
            self.theta_k.is_finite() && self.theta_k >= z,
            "finite and >= 0",
        )?;
        req(
            "f_min",
            self.f_min,
            self.f_min >= z && self.f_min <= self.f_max,
            "0 <= f_min <= f_max",
        )?;
        req("f_max", self.f_max, self.f_max <= one, "f_max <= 1")?;
        req(
            "xi_threshold",
            self.xi_threshold,
            self.xi_threshold > z && self.xi_threshold <= one,
            "0 < xi_threshold <= 1",
        )?;
        req(
            "solver_tol",
            self.solver.tol,
            self.solver.tol.is_finite() && self.solver.tol > z,
            "finite and > 0",
        )?;
        if self.solver.max_iter == 0 {
            return Err(ParamsError::OutOfRange {
                key: "solver_max_iter",
                value: "0".to_string(),
                requirement: ">= 1",
            });
        }
        Ok(())
    }

    /// Set one parameter from its config-file representation.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<(), ParamsError> {
        fn scalar<S: Scalar>(key: &str, value: &str) -> Result<S, ParamsError> {
            value
                .parse::<f64>()
                .ok()
                .and_then(S::from_f64)
                .ok_or_else(|| ParamsError::BadValue {
                    key: key.to_string(),
                    value: value.to_string(),
                    kind: "number",
                })
        }
        fn integer<T: FromStr>(
            key: &str,
            value: &str,
            kind: &'static str,
        ) -> Result<T, ParamsError> {
            value.parse::<T>().map_err(|_| ParamsError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
                kind,
            })
        }

        match key {
            "gamma" => self.gamma = scalar(key, value)?,
            "alpha" => self.alpha = scalar(key, value)?,
            "rho" => self.rho = scalar(key, value)?,
            "z0" => self.z0 = scalar(key, value)?,
            "eta" => self.eta = scalar(key, value)?,
            "sigma_z" => self.sigma_z = scalar(key, value)?,
            "delta" => self.delta = scalar(key, value)?,
            "r" => self.r = scalar(key, value)?,
            "pi" => self.pi = scalar(key, value)?,
            "a" => self.a = scalar(key, value)?,
            "c0" => self.c0 = scalar(key, value)?,
            "theta_c" => self.theta_c = scalar(key, value)?,
            "g_min" => self.g_min = scalar(key, value)?,
            "g_max" => self.g_max = scalar(key, value)?,
            "lambda" => self.lambda = scalar(key, value)?,
            "nu" => self.nu = scalar(key, value)?,
            "n_scale" => self.n_scale = scalar(key, value)?,
            "theta_k" => self.theta_k = scalar(key, value)?,
            "f_min" => self.f_min = scalar(key, value)?,
            "f_max" => self.f_max = scalar(key, value)?,
            "xi_threshold" => self.xi_threshold = scalar(key, value)?,
            "coupling_mode" => {
                self.coupling_mode = value.parse().map_err(|_| ParamsError::BadValue {
                    key: key.to_string(),
                    value: value.to_string(),
                    kind: "`simultaneous` or `lagged`",
                })?
            }
            "solver_tol" => self.solver.tol = scalar(key, value)?,
            "solver_max_iter" => self.solver.max_iter = integer(key, value, "integer >= 1")?,
            "horizon" => self.engine.horizon = integer(key, value, "unsigned integer")?,
            "burn_in" => self.engine.burn_in = integer(key, value, "unsigned integer")?,
            "seed" => self.engine.seed = integer(key, value, "unsigned integer")?,
            _ => {
                return Err(ParamsError::UnknownKey {
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Config-file representation of one parameter.
    fn value_string(&self, key: &str) -> String {
        match key {
            "gamma" => self.gamma.to_string(),
            "alpha" => self.alpha.to_string(),
            "rho" => self.rho.to_string(),
            "z0" => self.z0.to_string(),
            "eta" => self.eta.to_string(),
            "sigma_z" => self.sigma_z.to_string(),
            "delta" => self.delta.to_string(),
            "r" => self.r.to_string(),
            "pi" => self.pi.to_string(),
            "a" => self.a.to_string(),
            "c0" => self.c0.to_string(),
            "theta_c" => self.theta_c.to_string(),
            "g_min" => self.g_min.to_string(),
            "g_max" => self.g_max.to_string(),
            "lambda" => self.lambda.to_string(),
            "nu" => self.nu.to_string(),
            "n_scale" => self.n_scale.to_string(),
            "theta_k" => self.theta_k.to_string(),
            "f_min" => self.f_min.to_string(),
            "f_max" => self.f_max.to_string(),
            "xi_threshold" => self.xi_threshold.to_string(),
            "coupling_mode" => self.coupling_mode.to_string(),
            "solver_tol" => self.solver.tol.to_string(),
            "solver_max_iter" => self.solver.max_iter.to_string(),
            "horizon" => self.engine.horizon.to_string(),
            "burn_in" => self.engine.burn_in.to_string(),
            "seed" => self.engine.seed.to_string(),
            _ => unreachable!("value_string called with unknown key"),
        }
    }

    /// Parse a full config; every key is required and ranges are validated.
    pub fn load(config_text: &str) -> Result<Self, ParamsError> {
        let mut p = Self::defaults();
        let mut seen: HashSet<&'static str> = HashSet::new();
        for (idx, raw) in config_text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ParamsError::Syntax {
                line: idx + 1,
                text: raw.trim().to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            p.set_key(key, value)?;
            if let Some(k) = Self::KEYS.iter().find(|k| **k == key) {
                seen.insert(k);
            }
        }
        for key in Self::KEYS {
            if !seen.contains(key) {
                return Err(ParamsError::MissingKey { key });
            }
        }
        p.validate()?;
        Ok(p)
    }

    /// Emit the full config; `load(save(p)) == p` holds exactly because
    /// scalar formatting round-trips.
    pub fn save(&self) -> String {
        let mut out = String::new();
        out.push_str("# model\n");
        let sections: &[(&str, &[&str])] = &[
            ("", &Self::KEYS[..22]),
            ("# solver\n", &Self::KEYS[22..24]),
            ("# engine\n", &Self::KEYS[24..]),
        ];
        for (header, keys) in sections {
            out.push_str(header);
            for key in *keys {
                out.push_str(key);
                out.push_str(" = ");
                out.push_str(&self.value_string(key));
                out.push('\n');
            }
        }
        out
    }

    /// Memory, shock persistence, and capital timescales.
    pub fn derived_timescales(&self) -> Timescales<S> {
        let inv_abs_log = |x: S| x.ln().abs().recip();
        Timescales {
            lambda: Timescale::Finite(inv_abs_log(self.lambda)),
            // eta = 0 gives |ln 0| = inf, hence a zero-period timescale.
            eta: Timescale::Finite(inv_abs_log(self.eta)),
            delta: if self.delta.is_zero() {
                Timescale::Infinite
            } else {
                Timescale::Finite(inv_abs_log(S::one() - self.delta))
            },
        }
    }

    /// FNV-1a hash of the canonical config text; identifies a parameter set
    /// in run metadata and sweep manifests.
    pub fn config_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.save().bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

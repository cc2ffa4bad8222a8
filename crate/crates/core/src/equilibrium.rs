//! Within-period market equilibrium, in productivity-rescaled units.
//!
//! Given capital k and consumption rate G, the equilibrium triple
//! (c~, n, w~) satisfies
//!
//!   labour choice:    n c~ = G w~ / (2 gamma)
//!   wage:             w~ = (1 - alpha) (c~/n)^(1+rho)
//!   market clearing:  c~^(-rho) = alpha k^(-rho) + (1 - alpha) n^(-rho)
//!
//! and the rent is q~* = alpha (c~/k)^(1+rho). Substituting the last two
//! into the first gives a single strictly increasing residual in c~ on
//! (0, k alpha^(-1/rho)), solved by bisection. Powers of rho are evaluated
//! in log space so the solver stays stable for rho in the hundreds.

use thiserror::Error;

use crate::params::ModelParams;
use crate::scalar::{cast, Scalar};

/// Relative margin keeping the bracket inside the feasible interval.
const BRACKET_EPS: f64 = 1e-12;

/// Equilibrium quantities in rescaled units (consumption, labour, wage,
/// rent per unit of z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOutcome<S> {
    /// Rescaled consumption c~ = c / z.
    pub c_tilde: S,
    /// Hours worked.
    pub n: S,
    /// Rescaled wage w~ = w / z.
    pub w_tilde: S,
    /// Rescaled capital rent q~* = q* / z.
    pub q_star_tilde: S,
    /// Output; equals c~ by market clearing.
    pub y: S,
    /// Household utility G ln c - gamma n^2 evaluated at z = 1 (diagnostic).
    pub utility: S,
}

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("invalid equilibrium input: {name} = {value}")]
    InvalidInput { name: &'static str, value: String },
    #[error("no sign change over the bisection bracket at k = {k}, g = {g}")]
    NoBracket { k: String, g: String },
    #[error("bisection did not reach tolerance within {iterations} iterations")]
    NoConvergence { iterations: u32 },
}

/// Capital regime of the Leontief (rho -> inf) limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// beta >= 1: capital does not bind; rents vanish.
    Abundant,
    /// beta < 1: capital binds; labour is rationed to n = k.
    Scarce,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Abundant => "abundant",
            Regime::Scarce => "scarce",
        })
    }
}

/// Leontief-limit classification of a (k, G) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeontiefRegime<S> {
    /// beta = 2 k^2 gamma / G.
    pub beta: S,
    pub regime: Regime,
    /// Scarce-regime exponent with e^(-x) = (1 - beta)/alpha; the finite-rho
    /// consumption approaches k e^(-x/rho). Negative when (1 - beta)/alpha > 1.
    pub x: Option<S>,
}

/// Classify the Leontief regime of a (k, G) point.
pub fn leontief_regime<S: Scalar>(k: S, g: S, p: &ModelParams<S>) -> LeontiefRegime<S> {
    let two = cast::<S>(2.0);
    let beta = two * k * k * p.gamma / g;
    if beta >= S::one() {
        LeontiefRegime {
            beta,
            regime: Regime::Abundant,
            x: None,
        }
    } else {
        LeontiefRegime {
            beta,
            regime: Regime::Scarce,
            x: Some(-((S::one() - beta) / p.alpha).ln()),
        }
    }
}

fn check_inputs<S: Scalar>(k: S, g: S) -> Result<(), EquilibriumError> {
    if !(k.is_finite() && k > S::zero()) {
        return Err(EquilibriumError::InvalidInput {
            name: "k",
            value: k.to_string(),
        });
    }
    if !(g > S::zero() && g < S::one()) {
        return Err(EquilibriumError::InvalidInput {
            name: "g",
            value: g.to_string(),
        });
    }
    Ok(())
}

/// Solve the CES equilibrium at capital `k` and consumption rate `g`.
pub fn solve_ces<S: Scalar>(
    k: S,
    g: S,
    p: &ModelParams<S>,
) -> Result<EquilibriumOutcome<S>, EquilibriumError> {
    check_inputs(k, g)?;
    let one = S::one();
    let alpha = p.alpha;
    let rho = p.rho;
    let ln_k = k.ln();
    let ln_1ma = (one - alpha).ln();
    let half_g = g / (cast::<S>(2.0) * p.gamma);
    let eps = cast::<S>(BRACKET_EPS);

    // Residual of the labour-choice equation at trial consumption c~:
    //   n = c~ ((1-alpha)/u)^(1/rho),  w~ = u e^v,  u = 1 - alpha (c~/k)^rho
    // with v = (ln u - ln(1-alpha))/rho; increasing in c~.
    let residual = |c: S| -> S {
        let ln_c = c.ln();
        let scarcity = alpha * (rho * (ln_c - ln_k)).exp();
        let u = one - scarcity;
        if u <= S::zero() {
            return S::infinity();
        }
        let v = (u.ln() - ln_1ma) / rho;
        let ev = v.exp();
        let n = c / ev;
        n * c - half_g * u * ev
    };

    let mut lo = eps;
    let mut hi = k * (-alpha.ln() / rho).exp() * (one - eps);
    if !(residual(lo) < S::zero() && residual(hi) > S::zero()) {
        return Err(EquilibriumError::NoBracket {
            k: k.to_string(),
            g: g.to_string(),
        });
    }
    let tol = p.solver.tol;
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations >= p.solver.max_iter {
            return Err(EquilibriumError::NoConvergence { iterations });
        }
        let mid = (lo + hi) * cast::<S>(0.5);
        if residual(mid) < S::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    let c = (lo + hi) * cast::<S>(0.5);
    let ln_c = c.ln();
    let scarcity = alpha * (rho * (ln_c - ln_k)).exp();
    let u = one - scarcity;
    let v = (u.ln() - ln_1ma) / rho;
    let ev = v.exp();
    let n = c / ev;
    let w_tilde = u * ev;
    let q_star_tilde = scarcity * (c / k);
    Ok(EquilibriumOutcome {
        c_tilde: c,
        n,
        w_tilde,
        q_star_tilde,
        y: c,
        utility: g * ln_c - p.gamma * n * n,
    })
}

/// Closed-form equilibrium of the Leontief limit rho -> inf.
pub fn solve_leontief<S: Scalar>(
    k: S,
    g: S,
    p: &ModelParams<S>,
) -> Result<EquilibriumOutcome<S>, EquilibriumError> {
    check_inputs(k, g)?;
    let one = S::one();
    let regime = leontief_regime(k, g, p);
    let (c, n, w_tilde, q_star_tilde) = match regime.regime {
        Regime::Abundant => {
            let c = (g / (cast::<S>(2.0) * p.gamma)).sqrt();
            (c, c, one, S::zero())
        }
        Regime::Scarce => (k, k, regime.beta, one - regime.beta),
    };
    Ok(EquilibriumOutcome {
        c_tilde: c,
        n,
        w_tilde,
        q_star_tilde,
        y: c,
        utility: g * c.ln() - p.gamma * n * n,
    })
}

/// Household utility U = G ln c - gamma n^2 at absolute consumption `c`.
pub fn utility<S: Scalar>(c: S, n: S, g: S, p: &ModelParams<S>) -> Result<S, EquilibriumError> {
    if !(c.is_finite() && c > S::zero()) {
        return Err(EquilibriumError::InvalidInput {
            name: "c",
            value: c.to_string(),
        });
    }
    Ok(g * c.ln() - p.gamma * n * n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams<f64> {
        ModelParams::defaults()
    }

    #[test]
    fn abundant_capital_matches_leading_order_value() {
        // k = 10 makes the scarcity term (c~/k)^7 ~ 1e-9; c~ is then
        // sqrt(G/2gamma) (1-alpha)^(-1/7) = 0.5 * (2/3)^(-1/7).
        let eq = solve_ces(10.0, 0.5, &params()).unwrap();
        assert!(
            (eq.c_tilde - 0.529_816_85).abs() < 1e-6,
            "c~ = {}",
            eq.c_tilde
        );
        assert!((eq.c_tilde - 0.5298).abs() < 1e-4);
    }

    #[test]
    fn equilibrium_satisfies_its_defining_equations() {
        let p = params();
        for &(k, g) in &[
            (0.1, 0.1),
            (0.4, 0.95),
            (0.69, 0.95),
            (1.5, 0.5),
            (3.0, 0.05),
        ] {
            let eq = solve_ces(k, g, &p).unwrap();
            let foc = eq.n * eq.c_tilde - g * eq.w_tilde / (2.0 * p.gamma);
            assert!(
                foc.abs() <= 10.0 * p.solver.tol,
                "labour-choice residual {foc} at k={k}, g={g}"
            );
            let prod = p.alpha * (eq.c_tilde / k).powf(p.rho)
                + (1.0 - p.alpha) * (eq.c_tilde / eq.n).powf(p.rho)
                - 1.0;
            assert!(
                prod.abs() <= 1e-10,
                "market-clearing residual {prod} at k={k}, g={g}"
            );
            let wage = eq.w_tilde - (1.0 - p.alpha) * (eq.c_tilde / eq.n).powf(1.0 + p.rho);
            assert!(wage.abs() <= 1e-12, "wage residual {wage} at k={k}, g={g}");
            let rent = eq.q_star_tilde - p.alpha * (eq.c_tilde / k).powf(1.0 + p.rho);
            assert!(rent.abs() <= 1e-12, "rent residual {rent} at k={k}, g={g}");
        }
    }

    #[test]
    fn consumption_is_monotone_in_capital_and_spending_rate() {
        let p = params();
        let mut prev = 0.0;
        for i in 1..=30 {
            let k = 0.05 * i as f64;
            let c = solve_ces(k, 0.6, &p).unwrap().c_tilde;
            assert!(c > prev, "c~ not increasing at k = {k}");
            prev = c;
        }
        let mut prev = 0.0;
        for i in 1..=30 {
            let g = 0.03 * i as f64;
            let c = solve_ces(0.5, g, &p).unwrap().c_tilde;
            assert!(c > prev, "c~ not increasing at g = {g}");
            prev = c;
        }
    }

    #[test]
    fn vanishing_spending_rate_sends_consumption_and_labour_to_zero() {
        let eq = solve_ces(1.0, 1e-10, &params()).unwrap();
        assert!(eq.c_tilde < 1e-4 && eq.c_tilde > 0.0);
        assert!(eq.n < 1e-4 && eq.n > 0.0);
    }

    #[test]
    fn large_rho_approaches_the_leontief_limit() {
        let mut p = params();
        p.rho = 1e3;
        let ces = solve_ces(2.0, 0.95, &p).unwrap();
        let leo = solve_leontief(2.0, 0.95, &p).unwrap();
        assert!((leo.c_tilde - 0.475f64.sqrt()).abs() < 1e-15);
        assert!(
            (ces.c_tilde - leo.c_tilde).abs() / leo.c_tilde < 0.01,
            "ces {} vs leontief {}",
            ces.c_tilde,
            leo.c_tilde
        );
    }

    #[test]
    fn leontief_abundant_example() {
        let eq = solve_leontief(2.0, 0.95, &params()).unwrap();
        assert!((eq.c_tilde - 0.689_202_437_604_511).abs() < 1e-15);
        assert_eq!(eq.w_tilde, 1.0);
        assert_eq!(eq.q_star_tilde, 0.0);
        assert_eq!(eq.n, eq.c_tilde); // n = c~ w~ with w~ = 1
    }

    #[test]
    fn leontief_scarce_example() {
        // beta = 2 * 0.4^2 / 0.95
        let eq = solve_leontief(0.4, 0.95, &params()).unwrap();
        let beta = 0.32 / 0.95;
        assert_eq!(eq.c_tilde, 0.4);
        assert_eq!(eq.n, 0.4);
        assert!((eq.w_tilde - beta).abs() < 1e-15);
        assert!((eq.q_star_tilde - (1.0 - beta)).abs() < 1e-15);
        assert!((eq.q_star_tilde - 0.663_157_894_736_842).abs() < 1e-12);
    }

    #[test]
    fn leontief_branches_agree_at_the_matching_point() {
        // beta = 1 exactly at k = sqrt(G / 2 gamma).
        let p = params();
        let g = 0.5f64;
        let k = (g / 2.0).sqrt();
        let ab = solve_leontief(k, g, &p).unwrap();
        assert_eq!(ab.c_tilde, k);
        assert_eq!(ab.w_tilde, 1.0);
        assert_eq!(ab.q_star_tilde, 0.0);
        let just_scarce = solve_leontief(k * (1.0 - 1e-9), g, &p).unwrap();
        assert!((just_scarce.c_tilde - ab.c_tilde).abs() < 1e-8);
        assert!((just_scarce.w_tilde - 1.0).abs() < 1e-8);
        assert!(just_scarce.q_star_tilde < 1e-8);
    }

    #[test]
    fn regime_classification_and_scarce_exponent() {
        let p = params();
        let ab = leontief_regime(2.0, 0.95, &p);
        assert_eq!(ab.regime, Regime::Abundant);
        assert!(ab.x.is_none());
        assert!(ab.beta > 1.0);

        // beta = 0.7: (1 - beta)/alpha = 0.9 < 1 so x > 0.
        let g = 0.5;
        let k = (0.7_f64 * g / 2.0).sqrt();
        let sc = leontief_regime(k, g, &p);
        assert_eq!(sc.regime, Regime::Scarce);
        assert!((sc.beta - 0.7).abs() < 1e-12);
        let x = sc.x.unwrap();
        assert!((x - (-(0.3f64 * 3.0).ln())).abs() < 1e-12);
        assert!(x > 0.0);

        // beta = 0.3368...: (1 - beta)/alpha > 1 so x < 0.
        let sc2 = leontief_regime(0.4, 0.95, &p);
        assert!(sc2.x.unwrap() < 0.0);
    }

    #[test]
    fn utility_examples_and_domain() {
        let p = params();
        assert_eq!(utility(1.0, 0.0, 1.0, &p).unwrap(), 0.0);
        let u = utility(0.5, 0.3, 0.95, &p).unwrap();
        assert!((u - (0.95 * 0.5f64.ln() - 0.09)).abs() < 1e-15);
        assert!((u - (-0.748_489_835)).abs() < 1e-6, "u = {u}");
        assert!(matches!(
            utility(0.0, 0.3, 0.95, &p),
            Err(EquilibriumError::InvalidInput { name: "c", .. })
        ));
        assert!(utility(-1.0, 0.3, 0.95, &p).is_err());
    }

    #[test]
    fn invalid_inputs_are_named() {
        let p = params();
        assert!(matches!(
            solve_ces(-1.0, 0.5, &p),
            Err(EquilibriumError::InvalidInput { name: "k", .. })
        ));
        assert!(matches!(
            solve_ces(1.0, 0.0, &p),
            Err(EquilibriumError::InvalidInput { name: "g", .. })
        ));
        assert!(matches!(
            solve_ces(1.0, 1.0, &p),
            Err(EquilibriumError::InvalidInput { name: "g", .. })
        ));
        assert!(solve_leontief(f64::NAN, 0.5, &p).is_err());
    }

    #[test]
    fn f32_solves_are_close_to_f64() {
        let p64 = params();
        let p32: ModelParams<f32> = {
            let mut p: ModelParams<f32> = ModelParams::defaults();
            p.solver.tol = 1e-6;
            p
        };
        let e64 = solve_ces(0.7, 0.9, &p64).unwrap();
        let e32 = solve_ces(0.7f32, 0.9f32, &p32).unwrap();
        assert!((e32.c_tilde as f64 - e64.c_tilde).abs() < 1e-4);
    }
}

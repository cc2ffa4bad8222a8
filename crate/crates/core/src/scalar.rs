//! Floating-point abstraction used throughout the model.
//!
//! All model mathematics is generic over [`Scalar`], implemented for `f32`
//! and `f64`. The CLI and the default type aliases at the crate root use
//! `f64`; `f32` is supported for quick, lower-precision experiments.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Scalar type the simulator runs on.
///
/// Beyond `num_traits::Float`, a scalar must be able to produce its own
/// random draws so that generic code never converts through `f64` (which
/// would make `f32` runs depend on `f64` rounding).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Standard normal draw N(0, 1) from `rng`.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw on the half-open interval (0, 1].
    fn unit_uniform_open<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn unit_uniform_open<R: Rng + ?Sized>(rng: &mut R) -> Self {
        // gen() is uniform on [0, 1); flip to (0, 1] so x^p is never 0^p.
        1.0 - rng.gen::<f64>()
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn unit_uniform_open<R: Rng + ?Sized>(rng: &mut R) -> Self {
        1.0 - rng.gen::<f32>()
    }
}

/// Convert an `f64` constant into `S`. Panics only if `S` cannot represent
/// any finite `f64` at all, which no supported scalar does.
#[inline]
pub fn cast<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("finite f64 constant must convert to scalar")
}

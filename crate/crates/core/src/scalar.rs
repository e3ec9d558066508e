//! Scalar abstraction for the floating-point layers.
//!
//! Everything phase- or energy-valued is generic over [`Real`] so the same
//! code runs at `f32` or `f64`; the tolerances quoted in the test suites
//! assume `f64`. Exact integer structures (sign matrices, GF(2) systems,
//! Pauli masks) deliberately do not go through this trait.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar for phases, energies, and amplitudes.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Sum<Self>
    + Send
    + Sync
    + Debug
    + Display
    + LowerExp
    + 'static
{
    /// Lossy conversion from `f64`, for literals and tabulated constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    /// Conversion from an exact integer count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to any Real")
    }

    /// Conversion from a signed integer (e.g. ±1 coupling signs).
    fn of_i64(n: i64) -> Self {
        Self::from_i64(n).expect("i64 converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Reduce a phase to the canonical interval `[0, 2π)`.
pub fn wrap_2pi<R: Real>(x: R) -> R {
    let two_pi = R::TAU();
    let mut r = x % two_pi;
    if r < R::zero() {
        r += two_pi;
    }
    // `x % 2π` can round to exactly 2π for x slightly below a multiple.
    if r >= two_pi {
        r -= two_pi;
    }
    r
}

/// Reduce a phase difference to `(-π, π]`.
pub fn wrap_pm_pi<R: Real>(x: R) -> R {
    let two_pi = R::TAU();
    let mut r = x % two_pi;
    if r > R::PI() {
        r -= two_pi;
    } else if r <= -R::PI() {
        r += two_pi;
    }
    r
}

/// Distance between two phases when they are identified modulo π.
pub fn dist_mod_pi<R: Real>(a: R, b: R) -> R {
    let pi = R::PI();
    let r = (a - b).abs() % pi;
    r.min(pi - r)
}

use std::fmt::Display;

use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Floating scalar the whole crate is generic over.
///
/// `Float + FloatConst` gives the arithmetic and the constants, `FftNum`
/// lets the grid transforms run through rustfft, and `Display` backs the
/// text serializers (Rust's float `Display` is the shortest round-trip
/// representation, so CSV output loses nothing).
pub trait Scalar: Float + FloatConst + FftNum + Display {
    /// Largest argument handed to `exp` when evaluating transfer functions.
    /// Anything above is clamped and flagged as saturated instead of
    /// silently turning into `inf`.
    fn exp_clamp() -> Self;

    /// Relative l2 threshold at which adaptive kernel grids count as
    /// stabilized.
    fn grid_tol() -> Self;

    /// Shorthand for lossless-ish integer embedding.
    fn of(v: i64) -> Self {
        Self::from(v).expect("i64 embeds into any Scalar")
    }

    /// Shorthand for usize embedding.
    fn of_usize(v: usize) -> Self {
        Self::from(v).expect("usize embeds into any Scalar")
    }

    /// Lossy f64 view for diagnostics and serialization.
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn exp_clamp() -> f64 {
        700.0
    }

    fn grid_tol() -> f64 {
        1e-10
    }
}

impl Scalar for f32 {
    fn exp_clamp() -> f32 {
        80.0
    }

    fn grid_tol() -> f32 {
        1e-4
    }
}

//! Floating-point abstraction shared by every numerical routine in the crate.
//!
//! All algorithms are written against [`Scalar`], so the same code runs in
//! `f64` (the default, required for the long integrations) and in `f32`
//! (handy for cheap evaluations of closed-form surface functions).

use core::fmt::{Debug, Display};
use num_traits::{Float, FloatConst, FromPrimitive};

/// A real floating-point type usable by the engine.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    ///
    /// Every literal used in the crate is representable (possibly rounded) in
    /// both supported types, so the conversion cannot fail.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must be representable")
    }

    /// Converts a `usize` count into `Self`.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count must be representable")
    }

    /// Lossy conversion to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
    #[inline]
    fn eps() -> Self {
        <Self as Float>::epsilon()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

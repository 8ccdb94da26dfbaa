//! Floating-point abstraction for the learning core.
//!
//! Trees, ensembles and the rank statistics are written once against
//! [`Scalar`] and instantiated for `f32` and `f64`. Missing values are carried
//! as NaN, which both widths represent natively.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants and configuration.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    /// Sentinel for a missing observation.
    fn missing() -> Self {
        Self::nan()
    }

    fn is_missing(self) -> bool {
        self.is_nan()
    }

    /// Relative tolerance under which two split gains count as tied.
    fn tie_tolerance() -> Self {
        Self::epsilon() * Self::of(64.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an optional value into the in-matrix representation.
pub fn from_option<T: Scalar>(v: Option<f64>) -> T {
    match v {
        Some(x) if x.is_finite() => T::of(x),
        _ => T::missing(),
    }
}

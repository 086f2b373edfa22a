//! Numeric scalar abstraction shared by the solver and the density code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the LP engine, the model builders and the density
/// fitters are written against. Implemented for `f32` and `f64`.
///
/// The tolerances are fixed per type and used everywhere a comparison
/// against zero is needed.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Primal feasibility tolerance.
    fn feasibility_tol() -> Self;
    /// Reduced-cost tolerance used when pricing.
    fn optimality_tol() -> Self;
    /// Distance to the nearest integer below which a value counts as integral.
    fn integrality_tol() -> Self;
    /// Smallest magnitude accepted as a pivot element.
    fn pivot_tol() -> Self;

    /// Lossy conversion from `f64`.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    /// Lossy conversion from a count.
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $feas:expr, $opt:expr, $int:expr, $piv:expr) => {
        impl Scalar for $t {
            #[inline]
            fn feasibility_tol() -> Self {
                $feas
            }
            #[inline]
            fn optimality_tol() -> Self {
                $opt
            }
            #[inline]
            fn integrality_tol() -> Self {
                $int
            }
            #[inline]
            fn pivot_tol() -> Self {
                $piv
            }
        }
    };
}

impl_scalar!(f64, 1e-7, 1e-9, 1e-6, 1e-11);
impl_scalar!(f32, 1e-4, 1e-5, 1e-4, 1e-6);

/// Round half away from zero for nonnegative inputs, clamping negatives to 0.
pub fn round_half_up_nonneg<T: Scalar>(v: T) -> u64 {
    if !(v > T::zero()) {
        return 0;
    }
    (v + T::of(0.5)).floor().to_u64().unwrap_or(u64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_half_up_and_truncated_at_zero() {
        assert_eq!(round_half_up_nonneg(2.5_f64), 3);
        assert_eq!(round_half_up_nonneg(2.4999_f64), 2);
        assert_eq!(round_half_up_nonneg(-3.7_f64), 0);
        assert_eq!(round_half_up_nonneg(f64::NAN), 0);
        assert_eq!(round_half_up_nonneg(0.5_f32), 1);
    }
}

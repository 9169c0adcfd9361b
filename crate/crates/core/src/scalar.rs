use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the estimators and fitting routines are written against.
///
/// Implemented for `f32` and `f64`. Constants are built through [`Scalar::lit`] so
/// the math reads the same for both widths.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Convert an `f64` literal. Never fails for finite input.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar range")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic function, evaluated without overflow for large |x|.
pub fn expit<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

pub fn logit<F: Scalar>(p: F) -> F {
    (p / (F::one() - p)).ln()
}

/// Normal multiplier used for every 95% interval in the crate.
pub const Z_95: f64 = 1.96;

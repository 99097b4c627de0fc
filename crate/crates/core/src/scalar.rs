//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All model data, LP kernels and policies are generic over [`Scalar`], which
//! is implemented for `f32` and `f64`. Exact rational arithmetic is used only
//! where a construction must be exact before conversion (see
//! [`crate::casestudy`]).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type usable throughout the crate: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly
    /// rounded) in both implementors, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Factor applied to the `f64` default tolerances for this precision:
    /// `sqrt(eps / f64::EPSILON)`, so exactly 1 for `f64`.
    fn tolerance_scale() -> f64 {
        (Self::epsilon().as_f64() / f64::EPSILON).sqrt()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[inline]
pub(crate) fn max_abs<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, x| acc.max(x.abs()))
}

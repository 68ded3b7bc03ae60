//! Scalar abstraction shared by every kernel in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Real floating-point scalar: `f32` or `f64`.
///
/// The dense factorizations are delegated to `faer`, so the trait also
/// requires `faer`'s real-field bound.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + faer::traits::RealField
    + Debug
    + Display
    + LowerExp
    + Sum
    + Default
    + Send
    + Sync
    + 'static
{
    /// Relative singular-value cutoff used for numerical rank decisions.
    fn rank_tol() -> Self;

    /// Relative cutoff (against the largest singular value) below which a
    /// Terracini matrix is treated as exactly singular.
    fn ill_posed_tol() -> Self;

    /// Tolerance for "these columns are orthonormal" style preconditions.
    fn orthonormal_tol() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn rank_tol() -> Self {
        1e-10
    }
    fn ill_posed_tol() -> Self {
        1e-14
    }
    fn orthonormal_tol() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn rank_tol() -> Self {
        1e-4
    }
    fn ill_posed_tol() -> Self {
        1e-6
    }
    fn orthonormal_tol() -> Self {
        1e-3
    }
}

//! Scalar abstraction for the numeric core.
//!
//! Everything in this crate is generic over [`Scalar`], which is satisfied by
//! `f32` and `f64`. Concrete `f64` aliases live at the crate root; the tests
//! and the CLI run on `f64`.

use nalgebra::{DMatrix, DVector};

/// Floating-point scalar usable throughout the crate.
pub trait Scalar:
    nalgebra::RealField
    + Copy
    + Default
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::iter::Sum
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
{
    /// Machine epsilon of the scalar type.
    fn eps() -> Self;
}

impl Scalar for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Scalar for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Converts an `f64` constant into the active scalar type.
///
/// Panics only if the conversion is unrepresentable, which cannot happen for
/// the finite constants used in this crate.
#[inline]
pub fn sc<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}

/// Dense column vector over the active scalar type.
pub type Vector<T> = DVector<T>;
/// Dense matrix over the active scalar type.
pub type Matrix<T> = DMatrix<T>;

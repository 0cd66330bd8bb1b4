//! Scalar abstraction: the spectral core is generic over `f32`/`f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};

/// Floating-point scalar for all spectrum and sensitivity computations.
///
/// Implemented by `f32` and `f64`. Accuracy statements in this crate
/// (convergence tolerances, noise floors) assume `f64`; `f32` works but
/// degrades proportionally to its epsilon.
pub trait Scalar:
    Float + FloatConst + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FloatConst + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Lossy conversion of an `f64` constant into the working scalar.
#[inline]
pub fn fp<F: Scalar>(x: f64) -> F {
    F::from(x).expect("finite f64 constant must convert to the scalar type")
}

//! Scalar abstraction shared by the matrix kernel and the bound evaluators.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(v: f64) -> Self;

    /// Relative tolerance used by iterative kernels (eigen-solvers, bisections).
    fn kernel_tol() -> Self;
}

impl Real for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    fn kernel_tol() -> Self {
        4.0 * f32::EPSILON
    }
}

impl Real for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    fn kernel_tol() -> Self {
        1e-14
    }
}

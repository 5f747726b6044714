//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Beyond `num_traits::Float` this carries the error function pair, which
/// the kernels and the comparison function need, and the FFT bound used by
/// the spectral operator path.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    fn erf(self) -> Self;
    fn erfc(self) -> Self;

    /// Smallest tolerance that is meaningful for this precision when the
    /// caller would like `wanted`.
    fn floor_tol(wanted: f64) -> Self {
        let eps = Self::epsilon() * cast::<Self>(64.0);
        cast::<Self>(wanted).max(eps)
    }
}

impl Real for f64 {
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn cast<T: FromPrimitive>(v: f64) -> T {
    T::from_f64(v).expect("f64 literal representable in target scalar")
}

#[inline]
pub fn from_usize<T: FromPrimitive>(v: usize) -> T {
    T::from_usize(v).expect("usize representable in target scalar")
}

#[inline]
pub fn to_f64<T: ToPrimitive>(v: T) -> f64 {
    v.to_f64().expect("scalar converts to f64")
}

/// Real cube root on the odd branch: `sign(y)·|y|^{1/3}`.
#[inline]
pub fn signed_cube_root<T: Real>(y: T) -> T {
    y.cbrt()
}

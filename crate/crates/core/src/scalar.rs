//! Scalar element types.
//!
//! Every tensor, decomposition and network routine is generic over [`Scalar`],
//! which is implemented for `f32`, `f64`, `Complex<f32>` and `Complex<f64>`.
//! The runtime [`ScalarKind`] tag exists for the double-precision kinds that
//! cross process boundaries (files, mixed-kind promotion).

use std::fmt::{Debug, Display};

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::{Float, One, Zero};

/// Runtime element kind of a double-precision tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalarKind {
    RealF64,
    ComplexF64,
}

impl ScalarKind {
    /// Least upper bound under real ⊂ complex.
    pub fn join(self, other: ScalarKind) -> ScalarKind {
        match (self, other) {
            (ScalarKind::RealF64, ScalarKind::RealF64) => ScalarKind::RealF64,
            _ => ScalarKind::ComplexF64,
        }
    }

    pub fn is_complex(self) -> bool {
        self == ScalarKind::ComplexF64
    }
}

/// Real scalar companion of a [`Scalar`].
pub trait RealScalar: Scalar<Real = Self> + RealField + Float + PartialOrd {}

impl RealScalar for f32 {}
impl RealScalar for f64 {}

/// Element type of a dense tensor.
pub trait Scalar:
    ComplexField<RealField = <Self as Scalar>::Real>
    + Zero
    + One
    + Copy
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    type Real: RealScalar;

    /// `true` when the type carries an imaginary part.
    const IS_COMPLEX: bool;

    fn of(x: f64) -> Self;

    /// Builds `re + i·im`; the imaginary part is dropped for real types.
    fn from_parts(re: f64, im: f64) -> Self;

    fn re_f64(self) -> f64;
    fn im_f64(self) -> f64;

    fn abs_f64(self) -> f64 {
        self.re_f64().hypot(self.im_f64())
    }
}

impl Scalar for f32 {
    type Real = f32;
    const IS_COMPLEX: bool = false;
    fn of(x: f64) -> Self {
        x as f32
    }
    fn from_parts(re: f64, _im: f64) -> Self {
        re as f32
    }
    fn re_f64(self) -> f64 {
        self as f64
    }
    fn im_f64(self) -> f64 {
        0.0
    }
}

impl Scalar for f64 {
    type Real = f64;
    const IS_COMPLEX: bool = false;
    fn of(x: f64) -> Self {
        x
    }
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
    fn re_f64(self) -> f64 {
        self
    }
    fn im_f64(self) -> f64 {
        0.0
    }
}

impl Scalar for Complex<f32> {
    type Real = f32;
    const IS_COMPLEX: bool = true;
    fn of(x: f64) -> Self {
        Complex::new(x as f32, 0.0)
    }
    fn from_parts(re: f64, im: f64) -> Self {
        Complex::new(re as f32, im as f32)
    }
    fn re_f64(self) -> f64 {
        self.re as f64
    }
    fn im_f64(self) -> f64 {
        self.im as f64
    }
}

impl Scalar for Complex<f64> {
    type Real = f64;
    const IS_COMPLEX: bool = true;
    fn of(x: f64) -> Self {
        Complex::new(x, 0.0)
    }
    fn from_parts(re: f64, im: f64) -> Self {
        Complex::new(re, im)
    }
    fn re_f64(self) -> f64 {
        self.re
    }
    fn im_f64(self) -> f64 {
        self.im
    }
}

/// Double-precision scalars with a runtime kind tag.
pub trait KindedScalar: Scalar {
    const KIND: ScalarKind;
}

impl KindedScalar for f64 {
    const KIND: ScalarKind = ScalarKind::RealF64;
}

impl KindedScalar for Complex<f64> {
    const KIND: ScalarKind = ScalarKind::ComplexF64;
}

/// Embeds a real scalar into a scalar type of the same precision.
pub(crate) fn real_to<T: Scalar>(x: T::Real) -> T {
    T::from_real(x)
}

/// Lossy conversion through `f64`, used for kind promotion.
pub fn convert<A: Scalar, B: Scalar>(x: A) -> B {
    B::from_parts(x.re_f64(), x.im_f64())
}

use num_complex::Complex64;

use super::DenseTensor;
use crate::scalar::ScalarKind;

/// A double-precision tensor whose element kind is only known at run time.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTensor {
    Real(DenseTensor<f64>),
    Complex(DenseTensor<Complex64>),
}

impl AnyTensor {
    pub fn kind(&self) -> ScalarKind {
        match self {
            AnyTensor::Real(_) => ScalarKind::RealF64,
            AnyTensor::Complex(_) => ScalarKind::ComplexF64,
        }
    }

    pub fn shape(&self) -> &[usize] {
        match self {
            AnyTensor::Real(t) => t.shape(),
            AnyTensor::Complex(t) => t.shape(),
        }
    }

    /// Promotes to complex; complex tensors are returned unchanged.
    pub fn into_complex(self) -> DenseTensor<Complex64> {
        match self {
            AnyTensor::Real(t) => t.cast(),
            AnyTensor::Complex(t) => t,
        }
    }

    pub fn as_real(&self) -> Option<&DenseTensor<f64>> {
        match self {
            AnyTensor::Real(t) => Some(t),
            AnyTensor::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&DenseTensor<Complex64>> {
        match self {
            AnyTensor::Real(_) => None,
            AnyTensor::Complex(t) => Some(t),
        }
    }
}

impl From<DenseTensor<f64>> for AnyTensor {
    fn from(t: DenseTensor<f64>) -> Self {
        AnyTensor::Real(t)
    }
}

impl From<DenseTensor<Complex64>> for AnyTensor {
    fn from(t: DenseTensor<Complex64>) -> Self {
        AnyTensor::Complex(t)
    }
}

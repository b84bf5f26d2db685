//! Dense tensors, matrix product states and two-site DMRG.
//!
//! The numerical core is generic over [`Scalar`]; the aliases below fix the
//! two kinds used by the command line tool and the disk format.

pub mod contraction;
pub mod decomposition;
pub mod dmrg;
pub mod error;
pub mod models;
pub mod network;
pub mod operators;
pub mod scalar;
pub mod storage;
pub mod tensor;

pub use dmrg::{dmrg, dmrg_with_envs, DmrgOptions, DmrgResult, SweepReport};
pub use error::{Error, Result};
pub use network::{Env, MPO, MPS};
pub use num_complex::Complex64;
pub use scalar::{KindedScalar, RealScalar, Scalar, ScalarKind};
pub use storage::{LargeEnv, LargeMPO, LargeMPS};
pub use tensor::{AnyTensor, DenseTensor};

pub type Tensor = DenseTensor<f64>;
pub type ComplexTensor = DenseTensor<Complex64>;
pub type Mps = MPS<f64>;
pub type ComplexMps = MPS<Complex64>;
pub type Mpo = MPO<f64>;
pub type ComplexMpo = MPO<Complex64>;
pub type LargeMps = LargeMPS<f64>;
pub type LargeMpo = LargeMPO<f64>;

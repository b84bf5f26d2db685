//! Dense tensors stored as a shape plus a flat column-major buffer.
//!
//! Axis labels and element positions in the public API are 1-based. The first
//! index runs fastest in memory, so reshaping only rewrites the shape and the
//! matrix equivalent of a leading group of axes is a contiguous view.

mod algebra;
mod any;
mod display;
pub mod index;
mod slice;

use nalgebra::{ComplexField, DMatrix};
use num_traits::Zero;
use rand::Rng;

use crate::error::{arg_err, shape_err, Error, Result};
use crate::scalar::{convert, Scalar};

pub use algebra::{identity_tensor, join_index, linear_combination, tensor_combination};
pub use any::AnyTensor;
pub use index::{linear_index_of, multi_index_of, next_position};
pub use slice::{IndexSelector, Sliced};

/// A dense tensor of arbitrary rank.
///
/// `data.len() == shape.iter().product()` always holds; a rank-0 tensor holds
/// exactly one element.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> DenseTensor<T> {
    /// Wraps an existing column-major buffer.
    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(shape_err(format!("zero-sized axis in shape {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(shape_err(format!(
                "shape {shape:?} holds {n} elements but {} were given",
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, T::zero())
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::filled(shape, T::one())
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        assert!(!shape.contains(&0), "zero-sized axis in shape {shape:?}");
        let n = shape.iter().product();
        DenseTensor {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    /// Rank-0 tensor holding `value`.
    pub fn scalar(value: T) -> Self {
        DenseTensor {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    /// Builds a tensor by evaluating `f` at every 1-based position.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Self {
        let n: usize = shape.iter().product();
        let mut pos = index::make_position(shape.len());
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            next_position(&mut pos, shape);
            data.push(f(&pos));
        }
        DenseTensor {
            shape: shape.to_vec(),
            data,
        }
    }

    /// Tensor with entries drawn uniformly from [-1, 1) (real and imaginary parts).
    pub fn random<R: Rng + ?Sized>(shape: &[usize], rng: &mut R) -> Self {
        Self::from_fn(shape, |_| {
            let re = rng.random_range(-1.0..1.0);
            let im = if T::IS_COMPLEX {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            };
            T::from_parts(re, im)
        })
    }

    /// Rank-2 tensor from row-major nested rows (convenient for literals).
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(shape_err("rows must be nonempty and of equal length"));
        }
        Ok(Self::from_fn(&[nrows, ncols], |p| rows[p[0] - 1][p[1] - 1]))
    }

    /// Square diagonal matrix.
    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        let mut t = Self::zeros(&[n, n]);
        for (i, &v) in values.iter().enumerate() {
            t.data[i + i * n] = v;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Dimension of 1-based axis `axis`.
    pub fn dim(&self, axis: usize) -> usize {
        self.shape[axis - 1]
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Element at a 1-based linear index.
    pub fn linear(&self, n: usize) -> T {
        self.data[n - 1]
    }

    /// Value of a rank-0 (or single-element) tensor.
    pub fn to_scalar(&self) -> Result<T> {
        if self.data.len() == 1 {
            Ok(self.data[0])
        } else {
            Err(shape_err(format!(
                "tensor of shape {:?} is not a scalar",
                self.shape
            )))
        }
    }

    /// Element at a full 1-based position without building an intermediate
    /// tensor.
    pub fn search_element(&self, pos: &[usize]) -> Result<T> {
        let n = linear_index_of(pos, &self.shape)?;
        Ok(self.data[n - 1])
    }

    /// Writes one element at a full 1-based position.
    pub fn set_element(&mut self, pos: &[usize], value: T) -> Result<()> {
        let n = linear_index_of(pos, &self.shape)?;
        self.data[n - 1] = value;
        Ok(())
    }

    /// Copying reshape; the buffer is untouched.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        out.reshape_in_place(shape)?;
        Ok(out)
    }

    pub fn reshape_in_place(&mut self, shape: &[usize]) -> Result<()> {
        let n: usize = shape.iter().product();
        if n != self.data.len() || shape.contains(&0) {
            return Err(shape_err(format!(
                "cannot reshape {:?} ({} elements) to {shape:?}",
                self.shape,
                self.data.len()
            )));
        }
        self.shape = shape.to_vec();
        Ok(())
    }

    /// Merges contiguous, in-order groups of 1-based axes, e.g.
    /// `[[1, 2], [3]]`. Returns the reshaped tensor and the original shape for
    /// [`DenseTensor::unreshape`].
    pub fn reshape_grouped(&self, groups: &[Vec<usize>]) -> Result<(Self, Vec<usize>)> {
        let merged = grouped_shape(&self.shape, groups)?;
        Ok((self.reshape(&merged)?, self.shape.clone()))
    }

    /// Restores a previous shape; alias of reshape kept for intent.
    pub fn unreshape(&self, original: &[usize]) -> Result<Self> {
        self.reshape(original)
    }

    pub fn unreshape_in_place(&mut self, original: &[usize]) -> Result<()> {
        self.reshape_in_place(original)
    }

    /// Reorders axes: output axis `k` is input axis `order[k]` (1-based).
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.rank())?;
        if order.iter().enumerate().all(|(k, &o)| o == k + 1) {
            return Ok(self.clone());
        }
        let in_strides = index::strides(&self.shape);
        let out_shape: Vec<usize> = order.iter().map(|&o| self.shape[o - 1]).collect();
        let step: Vec<usize> = order.iter().map(|&o| in_strides[o - 1]).collect();
        let n = self.data.len();
        let mut data = Vec::with_capacity(n);
        let rank = out_shape.len();
        let mut counter = vec![0usize; rank];
        let mut offset = 0usize;
        for _ in 0..n {
            data.push(self.data[offset]);
            for k in 0..rank {
                counter[k] += 1;
                offset += step[k];
                if counter[k] < out_shape[k] {
                    break;
                }
                offset -= step[k] * out_shape[k];
                counter[k] = 0;
            }
        }
        Ok(DenseTensor {
            shape: out_shape,
            data,
        })
    }

    pub fn permute_in_place(&mut self, order: &[usize]) -> Result<()> {
        *self = self.permute(order)?;
        Ok(())
    }

    /// Square root of the sum of squared magnitudes.
    pub fn norm(&self) -> T::Real {
        let sq = self
            .data
            .iter()
            .fold(T::Real::zero(), |acc, x| acc + x.modulus_squared());
        ComplexField::sqrt(sq)
    }

    pub fn sum(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x)
    }

    pub fn conj(&self) -> Self {
        if !T::IS_COMPLEX {
            return self.clone();
        }
        self.map(|x| x.conjugate())
    }

    pub fn conj_in_place(&mut self) {
        if T::IS_COMPLEX {
            for x in &mut self.data {
                *x = x.conjugate();
            }
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseTensor<U> {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Converts the element type (real → complex embeds, complex → real drops
    /// the imaginary part).
    pub fn cast<U: Scalar>(&self) -> DenseTensor<U> {
        self.map(convert)
    }

    /// Largest elementwise magnitude of `self − other`; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> T::Real {
        assert_eq!(self.shape, other.shape, "max_abs_diff on different shapes");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::Real::zero(), |acc, (&a, &b)| {
                let d = (a - b).modulus();
                if d > acc {
                    d
                } else {
                    acc
                }
            })
    }

    /// Rank-2 tensor as an owned nalgebra matrix (same column-major buffer).
    pub fn to_matrix(&self) -> Result<DMatrix<T>> {
        if self.rank() != 2 {
            return Err(shape_err(format!(
                "expected a rank-2 tensor, got shape {:?}",
                self.shape
            )));
        }
        Ok(DMatrix::from_column_slice(
            self.shape[0],
            self.shape[1],
            &self.data,
        ))
    }

    pub fn from_matrix(m: DMatrix<T>) -> Self {
        let (r, c) = m.shape();
        DenseTensor {
            shape: vec![r, c],
            data: m.as_slice().to_vec(),
        }
    }

    /// `true` when no element has an imaginary part larger than `tol`.
    pub fn is_real_valued(&self, tol: f64) -> bool {
        self.data.iter().all(|x| x.im_f64().abs() <= tol)
    }
}

impl<T: Scalar> Default for DenseTensor<T> {
    fn default() -> Self {
        Self::scalar(T::one())
    }
}

/// Shape after merging the given groups of 1-based axes.
pub fn grouped_shape(shape: &[usize], groups: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut next = 1usize;
    let mut merged = Vec::with_capacity(groups.len());
    for g in groups {
        if g.is_empty() {
            return Err(arg_err("empty index group"));
        }
        let mut d = 1usize;
        for &a in g {
            if a != next {
                return Err(arg_err(format!(
                    "groups {groups:?} must list axes 1..={} contiguously and in order",
                    shape.len()
                )));
            }
            d *= shape[a - 1];
            next += 1;
        }
        merged.push(d);
    }
    if next != shape.len() + 1 {
        return Err(arg_err(format!(
            "groups {groups:?} do not cover all {} axes",
            shape.len()
        )));
    }
    Ok(merged)
}

pub(crate) fn check_permutation(order: &[usize], rank: usize) -> Result<()> {
    if order.len() != rank {
        return Err(arg_err(format!(
            "permutation {order:?} has length {}, tensor rank is {rank}",
            order.len()
        )));
    }
    let mut seen = vec![false; rank];
    for &o in order {
        if o == 0 || o > rank || seen[o - 1] {
            return Err(arg_err(format!("{order:?} is not a permutation of 1..={rank}")));
        }
        seen[o - 1] = true;
    }
    Ok(())
}

pub fn check_axes(axes: &[usize], rank: usize) -> Result<()> {
    let mut seen = vec![false; rank];
    for &a in axes {
        if a == 0 || a > rank {
            return Err(Error::Bounds(format!("axis {a} outside 1..={rank}")));
        }
        if seen[a - 1] {
            return Err(arg_err(format!("axis {a} listed twice in {axes:?}")));
        }
        seen[a - 1] = true;
    }
    Ok(())
}

impl<T: Scalar> DenseTensor<T> {
    /// `true` when every element is within `tol` of the identity matrix.
    pub fn is_identity(&self, tol: f64) -> bool {
        if self.rank() != 2 || self.shape[0] != self.shape[1] {
            return false;
        }
        let n = self.shape[0];
        self.data.iter().enumerate().all(|(k, &x)| {
            let want = if k % n == k / n { T::one() } else { T::zero() };
            (x - want).abs_f64() <= tol
        })
    }
}

//! Elementwise algebra: linear combinations and the operators built on them,
//! elementwise and matrix functions, identity tensors and direct sums.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{ComplexField, DMatrix};

use super::{check_axes, DenseTensor};
use crate::error::{arg_err, shape_err, Error, Result};
use crate::scalar::{real_to, Scalar};

/// `K = Σ_i combiner(α_i, M_i)` evaluated elementwise.
pub fn tensor_combination<T: Scalar>(
    coeffs: &[T],
    tensors: &[&DenseTensor<T>],
    combiner: impl Fn(T, T) -> T,
) -> Result<DenseTensor<T>> {
    let first = check_combination(coeffs, tensors)?;
    let mut out = DenseTensor::zeros(first.shape());
    accumulate(out.data_mut(), coeffs, tensors, &combiner);
    Ok(out)
}

/// [`tensor_combination`] with the multiplying combiner: `Σ_i α_i M_i`.
pub fn linear_combination<T: Scalar>(
    coeffs: &[T],
    tensors: &[&DenseTensor<T>],
) -> Result<DenseTensor<T>> {
    tensor_combination(coeffs, tensors, |a, x| a * x)
}

fn check_combination<'a, T: Scalar>(
    coeffs: &[T],
    tensors: &[&'a DenseTensor<T>],
) -> Result<&'a DenseTensor<T>> {
    let first = *tensors
        .first()
        .ok_or_else(|| arg_err("tensor combination needs at least one tensor"))?;
    if coeffs.len() != tensors.len() {
        return Err(arg_err(format!(
            "{} coefficients for {} tensors",
            coeffs.len(),
            tensors.len()
        )));
    }
    if let Some(bad) = tensors.iter().find(|t| t.shape() != first.shape()) {
        return Err(shape_err(format!(
            "cannot combine shapes {:?} and {:?}",
            first.shape(),
            bad.shape()
        )));
    }
    Ok(first)
}

fn accumulate<T: Scalar>(
    out: &mut [T],
    coeffs: &[T],
    tensors: &[&DenseTensor<T>],
    combiner: &impl Fn(T, T) -> T,
) {
    for (&a, t) in coeffs.iter().zip(tensors) {
        for (o, &x) in out.iter_mut().zip(t.data()) {
            *o += combiner(a, x);
        }
    }
}

impl<T: Scalar> DenseTensor<T> {
    /// In-place combination `self ← combiner(α_0, self) + Σ_i combiner(α_i, M_i)`.
    pub fn combine_in_place(
        &mut self,
        self_coeff: T,
        coeffs: &[T],
        others: &[&DenseTensor<T>],
        combiner: impl Fn(T, T) -> T,
    ) -> Result<()> {
        if !others.is_empty() {
            check_combination(coeffs, others)?;
            if others[0].shape() != self.shape() {
                return Err(shape_err(format!(
                    "cannot combine shapes {:?} and {:?}",
                    self.shape(),
                    others[0].shape()
                )));
            }
        }
        for x in self.data_mut() {
            *x = combiner(self_coeff, *x);
        }
        accumulate(self.data_mut(), coeffs, others, &combiner);
        Ok(())
    }

    /// `self ← α·self`.
    pub fn mult(&mut self, alpha: T) {
        for x in self.data_mut() {
            *x *= alpha;
        }
    }

    /// `self ← self + α·other`.
    pub fn add_scaled(&mut self, alpha: T, other: &DenseTensor<T>) -> Result<()> {
        self.combine_in_place(T::one(), &[alpha], &[other], |a, x| a * x)
    }

    /// `self ← self − α·other`.
    pub fn sub_scaled(&mut self, alpha: T, other: &DenseTensor<T>) -> Result<()> {
        self.add_scaled(-alpha, other)
    }

    /// `self ← self / α`, computed as multiplication by `1/α`.
    pub fn div_by(&mut self, alpha: T) {
        self.mult(T::one() / alpha)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.mult(alpha);
        out
    }

    /// Principal square root of every element.
    pub fn sqrt(&self) -> Result<Self> {
        let mut out = self.clone();
        out.sqrt_in_place()?;
        Ok(out)
    }

    pub fn sqrt_in_place(&mut self) -> Result<()> {
        if !T::IS_COMPLEX {
            if let Some(x) = self.data().iter().find(|x| x.re_f64() < 0.0) {
                return Err(Error::Domain(format!("square root of negative element {x}")));
            }
        }
        for x in self.data_mut() {
            *x = x.sqrt();
        }
        Ok(())
    }

    /// Matrix exponential of a Hermitian matrix through its eigendecomposition,
    /// `exp(G) = U exp(S) U†`.
    pub fn exp_hermitian(&self) -> Result<Self> {
        let m = self.to_matrix()?;
        if !m.is_square() {
            return Err(shape_err(format!(
                "matrix exponential needs a square matrix, got {:?}",
                self.shape()
            )));
        }
        let scale = self.norm().re_f64().max(1.0);
        let asym = (&m - m.adjoint()).norm().re_f64();
        if asym > scale * 1e-12 {
            return Err(arg_err(format!(
                "matrix is not Hermitian (‖M − M†‖ = {asym})"
            )));
        }
        let eig = SymmetricEigen::new(m);
        let u = eig.eigenvectors;
        let w = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| real_to::<T>(ComplexField::exp(x))));
        Ok(DenseTensor::from_matrix(&u * w * u.adjoint()))
    }

    /// Inverse of a diagonal matrix, reading only the diagonal. Entries with
    /// magnitude `≤ eff_zero` map to zero (pseudo-inverse). The result has the
    /// transposed shape.
    pub fn invert_diagonal(&self, eff_zero: f64) -> Result<Self> {
        if self.rank() != 2 {
            return Err(shape_err(format!(
                "expected a rank-2 tensor, got {:?}",
                self.shape()
            )));
        }
        let (r, c) = (self.dim(1), self.dim(2));
        let mut out = DenseTensor::zeros(&[c, r]);
        for i in 0..r.min(c) {
            let x = self.data()[i + i * r];
            if x.abs_f64() > eff_zero {
                out.data_mut()[i + i * c] = T::one() / x;
            }
        }
        Ok(out)
    }

    /// Conjugate transpose of a rank-2 tensor.
    pub fn adjoint(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(shape_err(format!("adjoint of shape {:?}", self.shape())));
        }
        Ok(DenseTensor::from_matrix(self.to_matrix()?.adjoint()))
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        crate::contraction::contract(self, &[2], other, &[1])
    }
}

/// Kronecker-delta tensor of shape `dims ++ dims` with ones where the first
/// half of the position equals the second half. A single dimension `d` gives
/// the `d × d` identity matrix.
pub fn identity_tensor<T: Scalar>(dims: &[usize]) -> Result<DenseTensor<T>> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(arg_err(format!("identity needs positive dimensions, got {dims:?}")));
    }
    let n = dims.len();
    let shape: Vec<usize> = dims.iter().chain(dims).copied().collect();
    Ok(DenseTensor::from_fn(&shape, |p| {
        if p[..n] == p[n..] {
            T::one()
        } else {
            T::zero()
        }
    }))
}

/// Direct sum of `a` and `b` on the listed 1-based axes: `a` fills the leading
/// block, `b` the trailing block, everything else is zero. Unlisted axes must
/// agree.
pub fn join_index<T: Scalar>(
    a: &DenseTensor<T>,
    b: &DenseTensor<T>,
    axes: &[usize],
) -> Result<DenseTensor<T>> {
    if a.rank() != b.rank() {
        return Err(shape_err(format!(
            "cannot join ranks {} and {}",
            a.rank(),
            b.rank()
        )));
    }
    check_axes(axes, a.rank())?;
    let mut shape = a.shape().to_vec();
    for k in 1..=a.rank() {
        if axes.contains(&k) {
            shape[k - 1] += b.dim(k);
        } else if a.dim(k) != b.dim(k) {
            return Err(shape_err(format!(
                "axis {k} is not joined but has dimensions {} and {}",
                a.dim(k),
                b.dim(k)
            )));
        }
    }
    let mut out = DenseTensor::zeros(&shape);
    let offset: Vec<usize> = (1..=a.rank())
        .map(|k| if axes.contains(&k) { a.dim(k) } else { 0 })
        .collect();
    place_block(&mut out, a, &vec![0; a.rank()]);
    place_block(&mut out, b, &offset);
    Ok(out)
}

fn place_block<T: Scalar>(dest: &mut DenseTensor<T>, src: &DenseTensor<T>, offset: &[usize]) {
    let strides = super::index::strides(dest.shape());
    let shape = src.shape().to_vec();
    let base: usize = offset.iter().zip(&strides).map(|(o, s)| o * s).sum();
    let mut counter = vec![0usize; shape.len()];
    let mut at = base;
    for &x in src.data() {
        dest.data_mut()[at] = x;
        for k in 0..shape.len() {
            counter[k] += 1;
            at += strides[k];
            if counter[k] < shape[k] {
                break;
            }
            at -= strides[k] * shape[k];
            counter[k] = 0;
        }
    }
}

fn zip_with<T: Scalar>(a: &DenseTensor<T>, b: &DenseTensor<T>, f: impl Fn(T, T) -> T) -> DenseTensor<T> {
    assert_eq!(
        a.shape(),
        b.shape(),
        "elementwise operation on shapes {:?} and {:?}",
        a.shape(),
        b.shape()
    );
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    DenseTensor::from_vec(a.shape().to_vec(), data).expect("shape preserved")
}

impl<T: Scalar> Add for &DenseTensor<T> {
    type Output = DenseTensor<T>;
    fn add(self, rhs: Self) -> DenseTensor<T> {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl<T: Scalar> Sub for &DenseTensor<T> {
    type Output = DenseTensor<T>;
    fn sub(self, rhs: Self) -> DenseTensor<T> {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl<T: Scalar> Neg for &DenseTensor<T> {
    type Output = DenseTensor<T>;
    fn neg(self) -> DenseTensor<T> {
        self.map(|x| -x)
    }
}

impl<T: Scalar> Mul<T> for &DenseTensor<T> {
    type Output = DenseTensor<T>;
    fn mul(self, rhs: T) -> DenseTensor<T> {
        self.scaled(rhs)
    }
}

impl<T: Scalar> Div<T> for &DenseTensor<T> {
    type Output = DenseTensor<T>;
    fn div(self, rhs: T) -> DenseTensor<T> {
        self.scaled(T::one() / rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Sliced;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vec1(v: &[f64]) -> DenseTensor<f64> {
        DenseTensor::from_vec(vec![v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn combination_examples() {
        let t = vec1(&[1.0, -2.0, 3.5]);
        assert_eq!(linear_combination(&[1.0], &[&t]).unwrap(), t);
        let zero = linear_combination(&[1.0, -1.0], &[&t, &t]).unwrap();
        assert_eq!(zero.norm(), 0.0);
        let ones = DenseTensor::<f64>::ones(&[2]);
        let k = linear_combination(&[2.0, 3.0], &[&ones, &ones]).unwrap();
        assert_eq!(k.data(), &[5.0, 5.0]);
    }

    #[test]
    fn combination_errors() {
        let a = vec1(&[1.0, 2.0]);
        let b = vec1(&[1.0, 2.0, 3.0]);
        assert!(linear_combination(&[1.0, 1.0], &[&a, &b]).is_err());
        assert!(linear_combination::<f64>(&[], &[]).is_err());
        assert!(linear_combination(&[1.0], &[&a, &a]).is_err());
    }

    #[test]
    fn custom_combiner_and_operators() {
        let a = vec1(&[1.0, 2.0]);
        let b = vec1(&[3.0, 5.0]);
        let k = tensor_combination(&[2.0, 1.0], &[&a, &b], |c, x| c + x).unwrap();
        assert_eq!(k.data(), &[7.0, 10.0]);
        assert_eq!((&a + &b).data(), &[4.0, 7.0]);
        assert_eq!((&b - &a).data(), &[2.0, 3.0]);
        assert_eq!((&a * 3.0).data(), &[3.0, 6.0]);
        assert_eq!((&b / 2.0).data(), &[1.5, 2.5]);
        assert_eq!((-&a).data(), &[-1.0, -2.0]);

        let mut c = a.clone();
        c.add_scaled(2.0, &b).unwrap();
        assert_eq!(c.data(), &[7.0, 12.0]);
        c.sub_scaled(2.0, &b).unwrap();
        assert_eq!(c, a);
        c.div_by(4.0);
        assert_eq!(c.data(), &[0.25, 0.5]);
    }

    #[test]
    fn sqrt_cases() {
        assert_eq!(vec1(&[4.0, 9.0]).sqrt().unwrap().data(), &[2.0, 3.0]);
        assert_eq!(vec1(&[0.0, 0.0]).sqrt().unwrap().data(), &[0.0, 0.0]);
        assert!(matches!(vec1(&[-1.0]).sqrt(), Err(Error::Domain(_))));
        let z = DenseTensor::from_vec(vec![1], vec![Complex64::new(-4.0, 0.0)]).unwrap();
        assert!((z.sqrt().unwrap().data()[0] - Complex64::new(0.0, 2.0)).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = DenseTensor::<f64>::random(&[3, 4], &mut rng).map(|x| x.abs());
        let r = t.sqrt().unwrap();
        let sq = r.map(|x| x * x);
        assert!(sq.max_abs_diff(&t) < 1e-14);
    }

    #[test]
    fn identity_examples() {
        let i2 = identity_tensor::<f64>(&[2]).unwrap();
        assert_eq!(i2, DenseTensor::diag(&[1.0, 1.0]));
        let i5 = identity_tensor::<f64>(&[5]).unwrap();
        assert_eq!((1..=5).map(|i| i5.search_element(&[i, i]).unwrap()).sum::<f64>(), 5.0);
        let i23 = identity_tensor::<f64>(&[2, 3]).unwrap();
        assert_eq!(i23.shape(), &[2, 3, 2, 3]);
        assert_eq!(i23.sum(), 6.0);
        assert!(identity_tensor::<f64>(&[0]).is_err());
        assert!(identity_tensor::<f64>(&[]).is_err());
    }

    #[test]
    fn join_examples() {
        let a = DenseTensor::from_vec(vec![1, 1], vec![2.0]).unwrap();
        let b = DenseTensor::from_vec(vec![1, 1], vec![7.0]).unwrap();
        let j = join_index(&a, &b, &[1, 2]).unwrap();
        assert_eq!(j, DenseTensor::diag(&[2.0, 7.0]));

        let x = DenseTensor::<f64>::ones(&[2, 3]);
        assert_eq!(join_index(&x, &x, &[2]).unwrap().shape(), &[2, 6]);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = DenseTensor::<f64>::random(&[2, 3], &mut rng);
        let z = DenseTensor::<f64>::zeros(&[2, 3]);
        let j = join_index(&r, &z, &[1, 2]).unwrap();
        assert_eq!(j.shape(), &[4, 6]);
        use crate::tensor::IndexSelector::Range;
        let tl = j.get_slice(&[Range(1, 2), Range(1, 3)]).unwrap();
        assert_eq!(tl, Sliced::Tensor(r.clone()));
        assert_eq!(j.sum(), r.sum());

        let bad = DenseTensor::<f64>::ones(&[3, 3]);
        assert!(join_index(&x, &bad, &[2]).is_err());
    }

    #[test]
    fn exp_cases() {
        let z = DenseTensor::<f64>::zeros(&[3, 3]);
        assert!(z.exp_hermitian().unwrap().is_identity(1e-15));
        let d = DenseTensor::diag(&[1.0, 2.0]).exp_hermitian().unwrap();
        let want = DenseTensor::diag(&[1f64.exp(), 2f64.exp()]);
        assert!(d.max_abs_diff(&want) < 1e-12);
        assert!(DenseTensor::<f64>::zeros(&[2, 3]).exp_hermitian().is_err());
        let nonherm = DenseTensor::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(nonherm.exp_hermitian().is_err());
    }

    #[test]
    fn exp_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = DenseTensor::<f64>::random(&[4, 4], &mut rng);
        let a = &r + &r.permute(&[2, 1]).unwrap();
        let e = a.exp_hermitian().unwrap().to_matrix().unwrap();
        let f = (-&a).exp_hermitian().unwrap().to_matrix().unwrap();
        assert!(DenseTensor::from_matrix(e * f).is_identity(1e-12));
    }

    fn taylor_exp(m: &DMatrix<Complex64>, terms: usize) -> DMatrix<Complex64> {
        let n = m.nrows();
        let mut sum = DMatrix::<Complex64>::identity(n, n);
        let mut term = DMatrix::<Complex64>::identity(n, n);
        for k in 1..terms {
            term = &term * m / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    proptest! {
        #[test]
        fn exp_matches_taylor(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = DenseTensor::<Complex64>::random(&[4, 4], &mut rng);
            let h = (&r + &r.permute(&[2, 1]).unwrap().conj()).scaled(Complex64::new(0.5, 0.0));
            let e = h.exp_hermitian().unwrap().to_matrix().unwrap();
            let t = taylor_exp(&h.to_matrix().unwrap(), 30);
            prop_assert!((e - t).norm() < 1e-10);
        }

        #[test]
        fn combination_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = DenseTensor::<f64>::random(&[3, 2], &mut rng);
            let lhs = linear_combination(&[alpha], &[&t]).unwrap().scaled(beta);
            let rhs = linear_combination(&[beta * alpha], &[&t]).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-14);
        }
    }

    #[test]
    fn pseudo_inverse_of_diagonal() {
        let d = DenseTensor::diag(&[2.0, 4.0]).invert_diagonal(1e-16).unwrap();
        assert_eq!(d, DenseTensor::diag(&[0.5, 0.25]));
        let p = DenseTensor::diag(&[1.0, 0.0]);
        let inv = p.invert_diagonal(1e-16).unwrap();
        assert_eq!(inv, p);
        let m = DenseTensor::diag(&[3.0, 0.0, 5.0]);
        let prod = m.to_matrix().unwrap() * m.invert_diagonal(1e-16).unwrap().to_matrix().unwrap();
        assert_eq!(DenseTensor::from_matrix(prod), DenseTensor::diag(&[1.0, 0.0, 1.0]));
    }
}

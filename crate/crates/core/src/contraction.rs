//! Pairwise tensor contraction.
//!
//! Both operands are permuted (when necessary) and reshaped into their matrix
//! equivalents so that the whole contraction is a single matrix product. The
//! uncontracted axes of `A` come first in the output, followed by the
//! uncontracted axes of `B`, each group in its original relative order.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{arg_err, shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{check_axes, AnyTensor, DenseTensor};

/// Full description of `C = α·(A ⋆ B) + β·Z` with optional conjugation of
/// either operand and an optional output permutation.
#[derive(Clone, Debug)]
pub struct ContractionSpec<T> {
    pub axes_a: Vec<usize>,
    pub axes_b: Vec<usize>,
    pub conj_a: bool,
    pub conj_b: bool,
    pub alpha: T,
    pub beta: T,
    pub accumulator: Option<DenseTensor<T>>,
    pub order: Option<Vec<usize>>,
}

impl<T: Scalar> ContractionSpec<T> {
    pub fn new(axes_a: &[usize], axes_b: &[usize]) -> Self {
        ContractionSpec {
            axes_a: axes_a.to_vec(),
            axes_b: axes_b.to_vec(),
            conj_a: false,
            conj_b: false,
            alpha: T::one(),
            beta: T::zero(),
            accumulator: None,
            order: None,
        }
    }

    pub fn conj(mut self, conj_a: bool, conj_b: bool) -> Self {
        self.conj_a = conj_a;
        self.conj_b = conj_b;
        self
    }

    pub fn alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    /// Adds `β·Z` to the result; `Z` has the (reordered) output shape.
    pub fn axpy(mut self, beta: T, z: DenseTensor<T>) -> Self {
        self.beta = beta;
        self.accumulator = Some(z);
        self
    }

    /// Permutes the output: output axis `k` is natural output axis `order[k]`.
    pub fn order(mut self, order: &[usize]) -> Self {
        self.order = Some(order.to_vec());
        self
    }
}

/// Ascending complement of `selected` within `1..=rank`.
pub fn complement_indices(selected: &[usize], rank: usize) -> Result<Vec<usize>> {
    check_axes(selected, rank)?;
    Ok((1..=rank).filter(|a| !selected.contains(a)).collect())
}

/// Rank-2 matrix equivalent with `row_axes` (in the given order) as rows and
/// the remaining axes (ascending) as columns. No data moves when the rows are
/// already the leading axes.
pub fn matrix_equivalent<T: Scalar>(
    t: &DenseTensor<T>,
    row_axes: &[usize],
    conj: bool,
) -> Result<DenseTensor<T>> {
    let cols = complement_indices(row_axes, t.rank())?;
    Ok(DenseTensor::from_matrix(matrixize(t, row_axes, &cols, conj)?))
}

fn matrixize<T: Scalar>(
    t: &DenseTensor<T>,
    rows: &[usize],
    cols: &[usize],
    conj: bool,
) -> Result<DMatrix<T>> {
    let nrows: usize = rows.iter().map(|&a| t.dim(a)).product();
    let ncols: usize = cols.iter().map(|&a| t.dim(a)).product();
    let order: Vec<usize> = rows.iter().chain(cols).copied().collect();
    let in_place = order.iter().enumerate().all(|(k, &o)| o == k + 1);
    let mut data = if in_place {
        t.data().to_vec()
    } else {
        t.permute(&order)?.into_data()
    };
    if conj && T::IS_COMPLEX {
        for x in &mut data {
            *x = x.conjugate();
        }
    }
    Ok(DMatrix::from_vec(nrows, ncols, data))
}

/// Validates that paired axes exist and have equal dimensions. Succeeds
/// silently; otherwise names the first offending pair.
pub fn check_contract<T: Scalar>(
    a: &DenseTensor<T>,
    axes_a: &[usize],
    b: &DenseTensor<T>,
    axes_b: &[usize],
) -> Result<()> {
    if axes_a.len() != axes_b.len() {
        return Err(arg_err(format!(
            "{} axes of A paired with {} axes of B",
            axes_a.len(),
            axes_b.len()
        )));
    }
    check_axes(axes_a, a.rank())?;
    check_axes(axes_b, b.rank())?;
    for (&ia, &ib) in axes_a.iter().zip(axes_b) {
        if a.dim(ia) != b.dim(ib) {
            return Err(Error::ContractMismatch {
                axis_a: ia,
                dim_a: a.dim(ia),
                axis_b: ib,
                dim_b: b.dim(ib),
            });
        }
    }
    Ok(())
}

/// Products with at least this many multiply-adds are split over threads.
const PARALLEL_WORK: usize = 1 << 21;

/// `a · b`, split into column blocks of `b` on the rayon pool when the
/// product is large. The block count depends only on the pool size, so a
/// fixed thread count gives reproducible results.
fn matmul<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let threads = rayon::current_num_threads();
    if threads < 2 || n < 2 || m.saturating_mul(k).saturating_mul(n) < PARALLEL_WORK {
        return a * b;
    }
    let width = n.div_ceil(threads.min(n));
    let starts: Vec<usize> = (0..n).step_by(width).collect();
    let parts: Vec<DMatrix<T>> = starts
        .into_par_iter()
        .map(|c0| a * b.columns(c0, width.min(n - c0)))
        .collect();
    let mut data = Vec::with_capacity(m * n);
    for p in &parts {
        data.extend_from_slice(p.as_slice());
    }
    DMatrix::from_vec(m, n, data)
}

/// General contraction driven by a [`ContractionSpec`].
pub fn contract_with<T: Scalar>(
    spec: &ContractionSpec<T>,
    a: &DenseTensor<T>,
    b: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    check_contract(a, &spec.axes_a, b, &spec.axes_b)?;
    let free_a = complement_indices(&spec.axes_a, a.rank())?;
    let free_b = complement_indices(&spec.axes_b, b.rank())?;
    let ma = matrixize(a, &free_a, &spec.axes_a, spec.conj_a)?;
    let mb = matrixize(b, &spec.axes_b, &free_b, spec.conj_b)?;
    let product = matmul(&ma, &mb);

    let shape: Vec<usize> = free_a
        .iter()
        .map(|&k| a.dim(k))
        .chain(free_b.iter().map(|&k| b.dim(k)))
        .collect();
    let mut out = DenseTensor::from_vec(shape, product.data.into())?;
    if let Some(order) = &spec.order {
        out = out.permute(order)?;
    }
    if spec.alpha != T::one() {
        out.mult(spec.alpha);
    }
    if let Some(z) = &spec.accumulator {
        if spec.beta != T::zero() {
            if z.shape() != out.shape() {
                return Err(shape_err(format!(
                    "accumulator shape {:?} does not match output shape {:?}",
                    z.shape(),
                    out.shape()
                )));
            }
            out.add_scaled(spec.beta, z)?;
        }
    }
    Ok(out)
}

/// `A ⋆ B` over the paired axes.
pub fn contract<T: Scalar>(
    a: &DenseTensor<T>,
    axes_a: &[usize],
    b: &DenseTensor<T>,
    axes_b: &[usize],
) -> Result<DenseTensor<T>> {
    contract_with(&ContractionSpec::new(axes_a, axes_b), a, b)
}

/// `conj(A) ⋆ B`.
pub fn ccontract<T: Scalar>(
    a: &DenseTensor<T>,
    axes_a: &[usize],
    b: &DenseTensor<T>,
    axes_b: &[usize],
) -> Result<DenseTensor<T>> {
    contract_with(&ContractionSpec::new(axes_a, axes_b).conj(true, false), a, b)
}

/// `A ⋆ conj(B)`.
pub fn contractc<T: Scalar>(
    a: &DenseTensor<T>,
    axes_a: &[usize],
    b: &DenseTensor<T>,
    axes_b: &[usize],
) -> Result<DenseTensor<T>> {
    contract_with(&ContractionSpec::new(axes_a, axes_b).conj(false, true), a, b)
}

/// `conj(A) ⋆ conj(B)`.
pub fn ccontractc<T: Scalar>(
    a: &DenseTensor<T>,
    axes_a: &[usize],
    b: &DenseTensor<T>,
    axes_b: &[usize],
) -> Result<DenseTensor<T>> {
    contract_with(&ContractionSpec::new(axes_a, axes_b).conj(true, true), a, b)
}

/// Contraction followed by an output permutation.
pub fn contract_ordered<T: Scalar>(
    order: &[usize],
    a: &DenseTensor<T>,
    axes_a: &[usize],
    b: &DenseTensor<T>,
    axes_b: &[usize],
) -> Result<DenseTensor<T>> {
    contract_with(&ContractionSpec::new(axes_a, axes_b).order(order), a, b)
}

/// Full contraction pairing axis `k` of `A` with axis `k` of `B`.
pub fn scalar_contract<T: Scalar>(
    a: &DenseTensor<T>,
    b: &DenseTensor<T>,
    conj_a: bool,
    conj_b: bool,
) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(shape_err(format!(
            "full contraction of shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut acc = T::zero();
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let x = if conj_a { x.conjugate() } else { x };
        let y = if conj_b { y.conjugate() } else { y };
        acc += x * y;
    }
    Ok(acc)
}

/// `A·A` (or `A†·A` when `conj`), the latter equal to the squared norm.
pub fn self_contract<T: Scalar>(a: &DenseTensor<T>, conj: bool) -> T {
    scalar_contract(a, a, conj, false).expect("identical shapes")
}

/// Partial trace over pairs of 1-based axes. The surviving axes keep their
/// relative order; tracing every axis yields a rank-0 tensor.
pub fn partial_trace<T: Scalar>(
    a: &DenseTensor<T>,
    pairs: &[(usize, usize)],
) -> Result<DenseTensor<T>> {
    let traced: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    check_axes(&traced, a.rank())?;
    for &(i, j) in pairs {
        if a.dim(i) != a.dim(j) {
            return Err(Error::ContractMismatch {
                axis_a: i,
                dim_a: a.dim(i),
                axis_b: j,
                dim_b: a.dim(j),
            });
        }
    }
    let keep = complement_indices(&traced, a.rank())?;
    let firsts: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let seconds: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let order: Vec<usize> = keep.iter().chain(&firsts).chain(&seconds).copied().collect();
    let p = a.permute(&order)?;
    let kept: usize = keep.iter().map(|&k| a.dim(k)).product();
    let diag: usize = firsts.iter().map(|&k| a.dim(k)).product();
    let mut out = vec![T::zero(); kept];
    for d in 0..diag {
        let base = kept * (d + d * diag);
        for (r, o) in out.iter_mut().enumerate() {
            *o += p.data()[base + r];
        }
    }
    let shape: Vec<usize> = keep.iter().map(|&k| a.dim(k)).collect();
    DenseTensor::from_vec(shape, out)
}

/// Contraction of runtime-kinded tensors; a real operand is promoted once when
/// the other is complex.
pub fn contract_any(
    a: &AnyTensor,
    axes_a: &[usize],
    b: &AnyTensor,
    axes_b: &[usize],
) -> Result<AnyTensor> {
    match (a, b) {
        (AnyTensor::Real(x), AnyTensor::Real(y)) => Ok(contract(x, axes_a, y, axes_b)?.into()),
        _ => {
            let x = a.clone().into_complex();
            let y = b.clone().into_complex();
            Ok(contract(&x, axes_a, &y, axes_b)?.into())
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::identity_tensor;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complement_examples() {
        assert_eq!(
            complement_indices(&[1, 2, 6], 10).unwrap(),
            vec![3, 4, 5, 7, 8, 9, 10]
        );
        assert_eq!(complement_indices(&[], 3).unwrap(), vec![1, 2, 3]);
        assert!(complement_indices(&[1, 2, 3], 3).unwrap().is_empty());
        assert!(complement_indices(&[1, 1], 3).is_err());
        assert!(complement_indices(&[4], 3).is_err());
    }

    #[test]
    fn matrix_equivalent_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = DenseTensor::<f64>::random(&[2, 3, 4], &mut rng);
        let m = matrix_equivalent(&t, &[1], false).unwrap();
        assert_eq!(m.shape(), &[2, 12]);
        assert_eq!(m.data(), t.data());

        let m3 = matrix_equivalent(&t, &[3], false).unwrap();
        let oracle = t.permute(&[3, 1, 2]).unwrap().reshape(&[4, 6]).unwrap();
        assert_eq!(m3, oracle);

        let c = matrix_equivalent(&t, &[1], true).unwrap();
        assert_eq!(c.data(), t.data());
    }

    #[test]
    fn reordered_output_listing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = DenseTensor::<f64>::random(&[15, 20, 5], &mut rng);
        let b = DenseTensor::<f64>::random(&[5, 10, 20], &mut rng);
        let c = contract(&a, &[3, 2], &b, &[1, 3]).unwrap();
        assert_eq!(c.shape(), &[15, 10]);
        let d = contract_ordered(&[2, 1], &a, &[3, 2], &b, &[1, 3]).unwrap();
        assert_eq!(d.shape(), &[10, 15]);
        assert_eq!(d, c.permute(&[2, 1]).unwrap());
        let r = reference::contract(&a, &[3, 2], &b, &[1, 3], false, false);
        assert!(c.max_abs_diff(&r) < 1e-12);
    }

    #[test]
    fn identity_action_and_axpy() {
        let id = identity_tensor::<f64>(&[2]).unwrap();
        let v = DenseTensor::from_vec(vec![2], vec![1.5, -2.0]).unwrap();
        assert_eq!(contract(&id, &[2], &v, &[1]).unwrap(), v);
        let three = contract_with(&ContractionSpec::new(&[2], &[1]).alpha(3.0), &id, &v).unwrap();
        assert_eq!(three.data(), &[4.5, -6.0]);
        let z = DenseTensor::from_vec(vec![2], vec![10.0, 20.0]).unwrap();
        let acc = contract_with(&ContractionSpec::new(&[2], &[1]).axpy(1.0, z.clone()), &id, &v).unwrap();
        assert_eq!(acc.data(), &[11.5, 18.0]);
        let ignored = contract_with(&ContractionSpec::new(&[2], &[1]).axpy(0.0, z), &id, &v).unwrap();
        assert_eq!(ignored, v);
    }

    #[test]
    fn three_identity_examples() {
        let i3 = identity_tensor::<f64>(&[3]).unwrap();
        let v = DenseTensor::from_vec(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(contract(&i3, &[2], &v, &[1]).unwrap(), v);
    }

    #[test]
    fn scalar_outputs() {
        let v = DenseTensor::from_vec(vec![2], vec![3.0, 4.0]).unwrap();
        assert_eq!(self_contract(&v, true), 25.0);
        let e1 = DenseTensor::from_vec(vec![2], vec![1.0, 0.0]).unwrap();
        let e2 = DenseTensor::from_vec(vec![2], vec![0.0, 1.0]).unwrap();
        assert_eq!(scalar_contract(&e1, &e2, false, false).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let a = DenseTensor::<Complex64>::random(&[2, 3], &mut rng);
            let b = DenseTensor::<Complex64>::random(&[2, 3], &mut rng);
            let mut brute = Complex64::new(0.0, 0.0);
            for i in 1..=2 {
                for j in 1..=3 {
                    brute += a.search_element(&[i, j]).unwrap().conj()
                        * b.search_element(&[i, j]).unwrap();
                }
            }
            let full = ccontract(&a, &[1, 2], &b, &[1, 2]).unwrap();
            assert_eq!(full.rank(), 0);
            assert!((full.to_scalar().unwrap() - brute).norm() < 1e-12);
            assert!((scalar_contract(&a, &b, true, false).unwrap() - brute).norm() < 1e-12);
            let n2 = self_contract(&a, true);
            assert!((n2.re - a.norm().powi(2)).abs() < 1e-12 && n2.im.abs() < 1e-12);
        }
        assert!(scalar_contract(&v, &DenseTensor::zeros(&[3]), false, false).is_err());
    }

    #[test]
    fn trace_examples() {
        let a = DenseTensor::<f64>::zeros(&[10, 20, 40, 30, 10, 5, 20]);
        let t = partial_trace(&a, &[(1, 5), (2, 7)]).unwrap();
        assert_eq!(t.shape(), &[40, 30, 5]);

        let id = DenseTensor::<f64>::diag(&[1.0; 4]);
        assert_eq!(partial_trace(&id, &[(1, 2)]).unwrap().to_scalar().unwrap(), 4.0);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = DenseTensor::<f64>::random(&[3, 3], &mut rng);
        let diag: f64 = (1..=3).map(|i| m.search_element(&[i, i]).unwrap()).sum();
        let tr = partial_trace(&m, &[(1, 2)]).unwrap().to_scalar().unwrap();
        assert!((tr - diag).abs() < 1e-15);

        assert!(partial_trace(&m, &[(1, 2), (2, 1)]).is_err());
        let r = DenseTensor::<f64>::zeros(&[2, 3]);
        assert!(matches!(partial_trace(&r, &[(1, 2)]), Err(Error::ContractMismatch { .. })));
    }

    #[test]
    fn trace_equals_identity_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = DenseTensor::<Complex64>::random(&[3, 2, 4, 3, 2], &mut rng);
        let tr = partial_trace(&a, &[(1, 4), (2, 5)]).unwrap();
        let id = identity_tensor::<Complex64>(&[3, 2]).unwrap();
        let via_id = contract(&id, &[1, 2, 3, 4], &a, &[1, 2, 4, 5]).unwrap();
        assert!(tr.max_abs_diff(&via_id) < 1e-12);
    }

    #[test]
    fn check_contract_reports() {
        let a = DenseTensor::<f64>::zeros(&[2, 3]);
        let b = DenseTensor::<f64>::zeros(&[3, 2]);
        assert!(check_contract(&a, &[2], &b, &[1]).is_ok());
        let c = DenseTensor::<f64>::zeros(&[4, 2]);
        let err = check_contract(&a, &[2], &c, &[1]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('3') && msg.contains('4'), "{msg}");
        assert!(contract(&a, &[2], &c, &[1]).is_err());
    }

    #[test]
    fn accepted_specs_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let ra = rng.random_range(1..=4);
            let rb = rng.random_range(1..=4);
            let sa: Vec<usize> = (0..ra).map(|_| rng.random_range(1..=3)).collect();
            let sb: Vec<usize> = (0..rb).map(|_| rng.random_range(1..=3)).collect();
            let k = rng.random_range(0..=ra.min(rb));
            let ia: Vec<usize> = (1..=k).collect();
            let ib: Vec<usize> = (1..=k).rev().collect();
            let a = DenseTensor::<f64>::random(&sa, &mut rng);
            let b = DenseTensor::<f64>::random(&sb, &mut rng);
            if check_contract(&a, &ia, &b, &ib).is_ok() {
                let c = contract(&a, &ia, &b, &ib).unwrap();
                let r = reference::contract(&a, &ia, &b, &ib, false, false);
                assert!(c.max_abs_diff(&r) < 1e-12);
            }
        }
    }

    #[test]
    fn large_products_split_over_threads() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let a = DenseTensor::<f64>::random(&[130, 130], &mut rng);
        let b = DenseTensor::<f64>::random(&[130, 131], &mut rng);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let got = pool.install(|| contract(&a, &[2], &b, &[1]).unwrap());
        let want = reference::contract(&a, &[2], &b, &[1], false, false);
        assert!(got.max_abs_diff(&want) < 1e-10);
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let one = serial.install(|| contract(&a, &[2], &b, &[1]).unwrap());
        assert!(got.max_abs_diff(&one) < 1e-10);
    }

    #[test]
    fn mixed_kinds_promote() {
        let a = DenseTensor::from_vec(vec![2], vec![1.0, 2.0]).unwrap();
        let b = DenseTensor::from_vec(vec![2], vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)])
            .unwrap();
        let c = contract_any(&a.clone().into(), &[1], &b.into(), &[1]).unwrap();
        match c {
            AnyTensor::Complex(t) => assert_eq!(t.to_scalar().unwrap(), Complex64::new(2.0, 1.0)),
            AnyTensor::Real(_) => panic!("expected promotion"),
        }
        let r = contract_any(&a.clone().into(), &[1], &a.into(), &[1]).unwrap();
        assert_eq!(r.kind(), crate::ScalarKind::RealF64);
    }
}

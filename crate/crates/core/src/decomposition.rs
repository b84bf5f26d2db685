//! Truncated matrix decompositions.
//!
//! Every decomposition accepts a rank-2 tensor, or any tensor together with an
//! index grouping `[[row axes], [column axes]]` in which case the outer factors
//! are returned with the grouped axes restored.
//!
//! Factor phases are pinned: in every column of the left isometry the entry of
//! largest magnitude (first one on exact ties) is real and positive. This makes
//! gauge moves and sweeps deterministic.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{arg_err, shape_err, Error, Result};
use crate::scalar::{real_to, Scalar};
use crate::tensor::{grouped_shape, DenseTensor};

const SVD_MAX_ITERATIONS: usize = 100_000;

/// Controls how many values a truncating decomposition keeps.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationSpec {
    /// Maximum number of kept values; 0 means unbounded.
    pub m: usize,
    /// Minimum number of kept values (capped at the available count).
    pub minm: usize,
    /// Largest discarded weight as a fraction of `mag^power`.
    pub cutoff: f64,
    /// Exponent applied to each value before weighing.
    pub power: f64,
    /// Magnitudes at or below this are treated as zero.
    pub eff_zero: f64,
    /// Drop values that are effectively zero.
    pub nozeros: bool,
    /// Never split a group of degenerate values.
    pub keepdeg: bool,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        TruncationSpec {
            m: 0,
            minm: 0,
            cutoff: 0.0,
            power: 2.0,
            eff_zero: 1e-16,
            nozeros: false,
            keepdeg: false,
        }
    }
}

impl TruncationSpec {
    /// No truncation, weights taken linearly (eigenvalue default).
    pub fn eigen() -> Self {
        TruncationSpec {
            power: 1.0,
            ..Self::default()
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_minm(mut self, minm: usize) -> Self {
        self.minm = minm;
        self
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cutoff) {
            return Err(arg_err(format!("cutoff {} outside [0, 1]", self.cutoff)));
        }
        if !(self.eff_zero > 0.0) {
            return Err(arg_err(format!("eff_zero {} must be positive", self.eff_zero)));
        }
        if !(self.power > 0.0) {
            return Err(arg_err(format!("power {} must be positive", self.power)));
        }
        Ok(())
    }

    /// `true` when decomposing a `rows × cols` matrix can never drop a value.
    pub fn is_lossless_for(&self, rows: usize, cols: usize) -> bool {
        self.cutoff == 0.0 && !self.nozeros && (self.m == 0 || self.m >= rows.min(cols))
    }
}

/// Outcome of [`truncation_rank`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub kept: usize,
    /// Discarded weight `Σ_{i>kept} |v_i|^power / mag^power`.
    pub truncerr: f64,
    /// Magnitude used for scaling (computed when the input was 0).
    pub mag: f64,
}

/// Number of values to keep from a nonincreasing list.
///
/// The smallest count whose discarded weight does not exceed
/// `cutoff · mag^power` is taken, then capped at `m`, raised to `minm`, and
/// finally extended over any degenerate group when `keepdeg` is set. At least
/// one value is always kept. `mag = 0` computes `(Σ |v_i|^power)^(1/power)`.
pub fn truncation_rank(values: &[f64], spec: &TruncationSpec, mag: f64) -> Result<Truncation> {
    if values.windows(2).any(|w| w[1] > w[0]) {
        return Err(arg_err("values must be sorted in nonincreasing order"));
    }
    let n = values.len();
    if n == 0 {
        return Err(arg_err("no values to truncate"));
    }
    let weights: Vec<f64> = values.iter().map(|v| v.abs().powf(spec.power)).collect();
    let mag = if mag > 0.0 {
        mag
    } else {
        weights.iter().sum::<f64>().powf(1.0 / spec.power)
    };
    let magp = mag.powf(spec.power);

    let available = if spec.nozeros {
        values
            .iter()
            .rposition(|v| v.abs() > spec.eff_zero)
            .map_or(1, |i| i + 1)
    } else {
        n
    };

    // suffix[k] = weight discarded when keeping the first k values
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + weights[k];
    }
    let budget = spec.cutoff * magp;
    let mut kept = (1..=available)
        .find(|&k| suffix[k] <= budget)
        .unwrap_or(available);
    if spec.m > 0 {
        kept = kept.min(spec.m);
    }
    kept = kept.max(spec.minm.min(available));
    if spec.keepdeg {
        let gap = spec.eff_zero * mag;
        while kept < available && (values[kept - 1] - values[kept]).abs() <= gap {
            kept += 1;
        }
    }
    let kept = kept.clamp(1, n);
    let truncerr = if magp > 0.0 { suffix[kept] / magp } else { 0.0 };
    Ok(Truncation {
        kept,
        truncerr,
        mag,
    })
}

/// Extra knobs for [`svd`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvdOptions {
    /// Input magnitude; 0 computes it from the singular values.
    pub mag: f64,
    /// Refine small singular values by recursive deflation.
    pub recursive: bool,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            mag: 0.0,
            recursive: false,
        }
    }
}

/// Truncated singular value decomposition `M ≈ U · diag(D) · V`.
#[derive(Clone, Debug)]
pub struct Svd<T: Scalar> {
    /// Left isometry, `rows × k` (or row axes × k).
    pub u: DenseTensor<T>,
    /// Singular values, nonincreasing.
    pub d: Vec<T::Real>,
    /// Right isometry, `k × cols` (or k × column axes); this is `V†` in the
    /// usual notation.
    pub v: DenseTensor<T>,
    pub truncerr: f64,
    pub mag: f64,
}

impl<T: Scalar> Svd<T> {
    pub fn d_matrix(&self) -> DenseTensor<T> {
        let vals: Vec<T> = self.d.iter().map(|&x| real_to(x)).collect();
        DenseTensor::diag(&vals)
    }

    /// `D·V` with the original column axes.
    pub fn dv(&self) -> DenseTensor<T> {
        let mut out = self.v.clone();
        scale_rows(&mut out, &self.d);
        out
    }

    /// `U·D` with the original row axes.
    pub fn ud(&self) -> DenseTensor<T> {
        let mut out = self.u.clone();
        scale_cols(&mut out, &self.d);
        out
    }
}

/// Multiplies slice `i` along the first axis by `d[i]`.
pub(crate) fn scale_rows<T: Scalar>(t: &mut DenseTensor<T>, d: &[T::Real]) {
    let k = d.len();
    for (n, x) in t.data_mut().iter_mut().enumerate() {
        *x *= real_to::<T>(d[n % k]);
    }
}

/// Multiplies slice `i` along the last axis by `d[i]`.
pub(crate) fn scale_cols<T: Scalar>(t: &mut DenseTensor<T>, d: &[T::Real]) {
    let k = d.len();
    let stride = t.len() / k;
    for (n, x) in t.data_mut().iter_mut().enumerate() {
        *x *= real_to::<T>(d[n / stride]);
    }
}

fn as_matrix<T: Scalar>(t: &DenseTensor<T>, groups: Option<&[Vec<usize>]>) -> Result<(DMatrix<T>, Vec<usize>, Vec<usize>)> {
    match groups {
        None => {
            if t.rank() != 2 {
                return Err(shape_err(format!(
                    "expected a rank-2 tensor or an index grouping, got shape {:?}",
                    t.shape()
                )));
            }
            Ok((t.to_matrix()?, vec![t.dim(1)], vec![t.dim(2)]))
        }
        Some(g) => {
            if g.len() != 2 {
                return Err(arg_err(format!("expected two index groups, got {}", g.len())));
            }
            let merged = grouped_shape(t.shape(), g)?;
            let rows = g[0].iter().map(|&a| t.dim(a)).collect();
            let cols = g[1].iter().map(|&a| t.dim(a)).collect();
            Ok((
                DMatrix::from_column_slice(merged[0], merged[1], t.data()),
                rows,
                cols,
            ))
        }
    }
}

fn with_trailing<T: Scalar>(m: DMatrix<T>, lead: &[usize]) -> DenseTensor<T> {
    let k = m.ncols();
    let shape: Vec<usize> = lead.iter().copied().chain([k]).collect();
    DenseTensor::from_vec(shape, m.data.into()).expect("element count preserved")
}

fn with_leading<T: Scalar>(m: DMatrix<T>, trail: &[usize]) -> DenseTensor<T> {
    let k = m.nrows();
    let shape: Vec<usize> = [k].into_iter().chain(trail.iter().copied()).collect();
    DenseTensor::from_vec(shape, m.data.into()).expect("element count preserved")
}

/// Makes the largest-magnitude entry of every column of `left` real positive,
/// compensating in the matching row of `right`.
fn pin_phases<T: Scalar>(left: &mut DMatrix<T>, right: &mut DMatrix<T>) {
    for j in 0..left.ncols() {
        let col = left.column(j);
        let mut best = 0;
        let mut best_mod = <T::Real as num_traits::Zero>::zero();
        for (i, x) in col.iter().enumerate() {
            let m = x.modulus();
            if m > best_mod {
                best_mod = m;
                best = i;
            }
        }
        if best_mod == <T::Real as num_traits::Zero>::zero() {
            continue;
        }
        let pivot = left[(best, j)];
        let phase = pivot.unscale(best_mod);
        if phase == T::one() {
            continue;
        }
        left.column_mut(j).scale_mut_by(phase.conjugate());
        right.row_mut(j).scale_mut_by(phase);
    }
}

trait ScaleBy<T> {
    fn scale_mut_by(&mut self, s: T);
}

impl<T: Scalar, R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::StorageMut<T, R, C>> ScaleBy<T>
    for nalgebra::Matrix<T, R, C, S>
{
    fn scale_mut_by(&mut self, s: T) {
        for x in self.iter_mut() {
            *x *= s;
        }
    }
}

struct RawSvd<T: Scalar> {
    u: DMatrix<T>,
    s: Vec<T::Real>,
    vt: DMatrix<T>,
}

fn kernel_svd<T: Scalar>(m: DMatrix<T>) -> Result<RawSvd<T>> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Err(shape_err("empty matrix"));
    }
    let svd = m
        .try_svd(true, true, <T::Real as num_traits::Float>::epsilon(), SVD_MAX_ITERATIONS)
        .ok_or_else(|| Error::Kernel(format!("SVD of a {r}×{c} matrix did not converge")))?;
    Ok(RawSvd {
        u: svd.u.expect("requested U"),
        s: svd.singular_values.iter().copied().collect(),
        vt: svd.v_t.expect("requested V"),
    })
}

/// SVD that refines singular values far below the largest one by
/// re-decomposing the projected small block, up to three levels deep.
fn recursive_kernel<T: Scalar>(m: &DMatrix<T>, tolerance: f64, depth: usize) -> Result<RawSvd<T>> {
    let mut raw = kernel_svd(m.clone())?;
    if depth >= 3 || raw.s.is_empty() {
        return Ok(raw);
    }
    let top = raw.s[0].re_f64();
    let Some(split) = raw.s.iter().position(|x| x.re_f64() < tolerance * top) else {
        return Ok(raw);
    };
    if split == 0 {
        return Ok(raw);
    }
    let k = raw.s.len();
    let uc = raw.u.columns(split, k - split).into_owned();
    let vc = raw.vt.rows(split, k - split).into_owned();
    let block = uc.adjoint() * m * vc.adjoint();
    let inner = recursive_kernel(&block, tolerance, depth + 1)?;
    let new_u = &uc * &inner.u;
    let new_vt = &inner.vt * &vc;
    raw.u.columns_mut(split, k - split).copy_from(&new_u);
    raw.vt.rows_mut(split, k - split).copy_from(&new_vt);
    raw.s[split..].copy_from_slice(&inner.s);
    sort_descending(&mut raw);
    Ok(raw)
}

fn sort_descending<T: Scalar>(raw: &mut RawSvd<T>) {
    let mut idx: Vec<usize> = (0..raw.s.len()).collect();
    idx.sort_by(|&a, &b| raw.s[b].partial_cmp(&raw.s[a]).unwrap_or(std::cmp::Ordering::Equal));
    if idx.iter().enumerate().all(|(k, &i)| k == i) {
        return;
    }
    let u = DMatrix::from_fn(raw.u.nrows(), idx.len(), |r, c| raw.u[(r, idx[c])]);
    let vt = DMatrix::from_fn(idx.len(), raw.vt.ncols(), |r, c| raw.vt[(idx[r], c)]);
    raw.s = idx.iter().map(|&i| raw.s[i]).collect();
    raw.u = u;
    raw.vt = vt;
}

/// Truncated SVD of a rank-2 tensor.
pub fn svd<T: Scalar>(m: &DenseTensor<T>, spec: &TruncationSpec, opts: SvdOptions) -> Result<Svd<T>> {
    svd_impl(m, None, spec, opts)
}

/// Truncated SVD after grouping indices, e.g. `[[1, 2], [3]]`.
pub fn svd_grouped<T: Scalar>(
    t: &DenseTensor<T>,
    groups: &[Vec<usize>],
    spec: &TruncationSpec,
    opts: SvdOptions,
) -> Result<Svd<T>> {
    svd_impl(t, Some(groups), spec, opts)
}

fn svd_impl<T: Scalar>(
    t: &DenseTensor<T>,
    groups: Option<&[Vec<usize>]>,
    spec: &TruncationSpec,
    opts: SvdOptions,
) -> Result<Svd<T>> {
    spec.validate()?;
    let (m, rows, cols) = as_matrix(t, groups)?;
    let raw = if opts.recursive {
        recursive_kernel(&m, 1e-4, 0)?
    } else {
        kernel_svd(m)?
    };
    finish_svd(raw, &rows, &cols, spec, opts.mag)
}

fn finish_svd<T: Scalar>(
    raw: RawSvd<T>,
    rows: &[usize],
    cols: &[usize],
    spec: &TruncationSpec,
    mag: f64,
) -> Result<Svd<T>> {
    let values: Vec<f64> = raw.s.iter().map(|x| x.re_f64()).collect();
    let cut = truncation_rank(&values, spec, mag)?;
    let k = cut.kept;
    let mut u = raw.u.columns(0, k).into_owned();
    let mut vt = raw.vt.rows(0, k).into_owned();
    pin_phases(&mut u, &mut vt);
    Ok(Svd {
        u: with_trailing(u, rows),
        d: raw.s[..k].to_vec(),
        v: with_leading(vt, cols),
        truncerr: cut.truncerr,
        mag: cut.mag,
    })
}

/// Untruncated SVD with recursive refinement of small singular values.
/// `tolerance` is the ratio to the largest value below which a block is
/// re-decomposed.
pub fn recursive_svd<T: Scalar>(m: &DenseTensor<T>, tolerance: f64) -> Result<Svd<T>> {
    let (mat, rows, cols) = as_matrix(m, None)?;
    let raw = recursive_kernel(&mat, tolerance, 0)?;
    finish_svd(raw, &rows, &cols, &TruncationSpec::default(), 0.0)
}

/// Truncated Hermitian eigendecomposition `M·U = U·diag(D)` (or
/// `M·U = B·U·diag(D)` with an overlap matrix), eigenvalues descending.
#[derive(Clone, Debug)]
pub struct Eigen<T: Scalar> {
    pub u: DenseTensor<T>,
    pub d: Vec<T::Real>,
    pub truncerr: f64,
    pub mag: f64,
}

impl<T: Scalar> Eigen<T> {
    pub fn d_matrix(&self) -> DenseTensor<T> {
        let vals: Vec<T> = self.d.iter().map(|&x| real_to(x)).collect();
        DenseTensor::diag(&vals)
    }
}

pub fn eigen<T: Scalar>(
    m: &DenseTensor<T>,
    spec: &TruncationSpec,
    overlap: Option<&DenseTensor<T>>,
) -> Result<Eigen<T>> {
    eigen_impl(m, None, spec, overlap)
}

pub fn eigen_grouped<T: Scalar>(
    t: &DenseTensor<T>,
    groups: &[Vec<usize>],
    spec: &TruncationSpec,
    overlap: Option<&DenseTensor<T>>,
) -> Result<Eigen<T>> {
    eigen_impl(t, Some(groups), spec, overlap)
}

fn check_hermitian<T: Scalar>(m: &DMatrix<T>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(shape_err(format!("{what} must be square, got {:?}", m.shape())));
    }
    let scale = m.norm().re_f64().max(1.0);
    let asym = (m - m.adjoint()).norm().re_f64();
    if asym > 1e-10 * scale {
        return Err(arg_err(format!(
            "{what} is not Hermitian (‖M − M†‖ = {asym:e})"
        )));
    }
    Ok(())
}

fn eigen_impl<T: Scalar>(
    t: &DenseTensor<T>,
    groups: Option<&[Vec<usize>]>,
    spec: &TruncationSpec,
    overlap: Option<&DenseTensor<T>>,
) -> Result<Eigen<T>> {
    spec.validate()?;
    let (m, rows, _) = as_matrix(t, groups)?;
    check_hermitian(&m, "matrix")?;
    let (vals, vecs) = match overlap {
        None => {
            let e = SymmetricEigen::new(m);
            (e.eigenvalues, e.eigenvectors)
        }
        Some(b) => {
            let b = b.to_matrix()?;
            check_hermitian(&b, "overlap matrix")?;
            if b.shape() != m.shape() {
                return Err(shape_err("overlap matrix shape differs from the input"));
            }
            let chol = Cholesky::new(b)
                .ok_or_else(|| arg_err("overlap matrix is not positive definite"))?;
            let l = chol.l();
            let n = l.nrows();
            let linv = l
                .solve_lower_triangular(&DMatrix::identity(n, n))
                .ok_or_else(|| arg_err("overlap matrix is singular"))?;
            let reduced = &linv * &m * linv.adjoint();
            // symmetrize away rounding noise
            let reduced = (&reduced + reduced.adjoint()) * T::of(0.5);
            let e = SymmetricEigen::new(reduced);
            (e.eigenvalues, linv.adjoint() * e.eigenvectors)
        }
    };
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted: Vec<f64> = idx.iter().map(|&i| vals[i].re_f64()).collect();
    let cut = truncation_rank(&sorted, spec, 0.0)?;
    let k = cut.kept;
    let mut u = DMatrix::from_fn(vecs.nrows(), k, |r, c| vecs[(r, idx[c])]);
    let mut dummy = DMatrix::<T>::zeros(k, 0);
    pin_phases(&mut u, &mut dummy);
    Ok(Eigen {
        u: with_trailing(u, &rows),
        d: idx[..k].iter().map(|&i| vals[i]).collect(),
        truncerr: cut.truncerr,
        mag: cut.mag,
    })
}

/// Two-factor decomposition (QR, LQ, polar). QR and LQ never truncate and
/// report `truncerr = 0`, `mag = 1`.
#[derive(Clone, Debug)]
pub struct Factorization<T: Scalar> {
    pub left: DenseTensor<T>,
    pub right: DenseTensor<T>,
    pub truncerr: f64,
    pub mag: f64,
}

fn raw_qr<T: Scalar>(m: DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let qr = m.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    pin_phases(&mut q, &mut r);
    (q, r)
}

/// `M = Q·R` with `Q` isometric and `R` upper triangular.
pub fn qr<T: Scalar>(m: &DenseTensor<T>) -> Result<Factorization<T>> {
    qr_impl(m, None)
}

pub fn qr_grouped<T: Scalar>(t: &DenseTensor<T>, groups: &[Vec<usize>]) -> Result<Factorization<T>> {
    qr_impl(t, Some(groups))
}

fn qr_impl<T: Scalar>(t: &DenseTensor<T>, groups: Option<&[Vec<usize>]>) -> Result<Factorization<T>> {
    let (m, rows, cols) = as_matrix(t, groups)?;
    let (q, r) = raw_qr(m);
    Ok(Factorization {
        left: with_trailing(q, &rows),
        right: with_leading(r, &cols),
        truncerr: 0.0,
        mag: 1.0,
    })
}

/// `M = L·Q` with `L` lower triangular and `Q` having orthonormal rows.
pub fn lq<T: Scalar>(m: &DenseTensor<T>) -> Result<Factorization<T>> {
    lq_impl(m, None)
}

pub fn lq_grouped<T: Scalar>(t: &DenseTensor<T>, groups: &[Vec<usize>]) -> Result<Factorization<T>> {
    lq_impl(t, Some(groups))
}

fn lq_impl<T: Scalar>(t: &DenseTensor<T>, groups: Option<&[Vec<usize>]>) -> Result<Factorization<T>> {
    let (m, rows, cols) = as_matrix(t, groups)?;
    // M† = Q R  ⇒  M = R† Q†
    let (q, r) = raw_qr(m.adjoint());
    Ok(Factorization {
        left: with_trailing(r.adjoint(), &rows),
        right: with_leading(q.adjoint(), &cols),
        truncerr: 0.0,
        mag: 1.0,
    })
}

/// Polar decomposition built on the SVD `A = U·D·V`.
///
/// The left form (`right == false`) returns `(U·D·U†, U·V)`; the right form
/// returns `(U·V, V†·D·V)`. The Hermitian factor keeps the outer basis on both
/// of its axes. `outermaxm` further caps the number of kept singular values.
pub fn polar<T: Scalar>(
    a: &DenseTensor<T>,
    groups: &[Vec<usize>],
    right: bool,
    outermaxm: Option<usize>,
    spec: &TruncationSpec,
) -> Result<Factorization<T>> {
    let mut spec = spec.clone();
    if let Some(cap) = outermaxm {
        spec.m = if spec.m == 0 { cap } else { spec.m.min(cap) };
    }
    let (m, rows, cols) = as_matrix(a, Some(groups))?;
    let dec = finish_svd(kernel_svd(m)?, &[rows.iter().product()], &[cols.iter().product()], &spec, 0.0)?;
    let u = dec.u.to_matrix()?;
    let v = dec.v.to_matrix()?;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dec.d.len(),
        dec.d.iter().map(|&x| real_to::<T>(x)),
    ));
    let isometry = &u * &v;
    let shape_of = |m: DMatrix<T>, lead: &[usize], trail: &[usize]| {
        let shape: Vec<usize> = lead.iter().chain(trail).copied().collect();
        DenseTensor::from_vec(shape, m.data.into())
    };
    let (left, right_factor) = if right {
        let weight = v.adjoint() * d * &v;
        (shape_of(isometry, &rows, &cols)?, shape_of(weight, &cols, &cols)?)
    } else {
        let weight = &u * d * u.adjoint();
        (shape_of(weight, &rows, &rows)?, shape_of(isometry, &rows, &cols)?)
    };
    Ok(Factorization {
        left,
        right: right_factor,
        truncerr: dec.truncerr,
        mag: dec.mag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat<T: Scalar>(t: &DenseTensor<T>) -> DMatrix<T> {
        t.to_matrix().unwrap()
    }

    fn rebuild<T: Scalar>(s: &Svd<T>) -> DMatrix<T> {
        mat(&s.u) * mat(&s.d_matrix()) * mat(&s.v)
    }

    #[test]
    fn truncation_hand_cases() {
        let spec = TruncationSpec {
            m: 1,
            cutoff: 1.0,
            ..Default::default()
        };
        let t = truncation_rank(&[4.0, 3.0], &spec, 0.0).unwrap();
        assert_eq!(t.kept, 1);
        assert_eq!(t.mag, 5.0);
        assert!((t.truncerr - 9.0 / 25.0).abs() < 1e-15);

        let all = truncation_rank(&[3.0, 2.0, 1.0, 0.0], &TruncationSpec::default(), 0.0).unwrap();
        assert_eq!(all.kept, 3);
        assert_eq!(all.truncerr, 0.0);

        let deg = TruncationSpec {
            m: 2,
            keepdeg: true,
            ..Default::default()
        };
        assert_eq!(truncation_rank(&[2.0, 1.0, 1.0, 0.5], &deg, 0.0).unwrap().kept, 3);
        let nodeg = TruncationSpec { m: 2, ..Default::default() };
        assert_eq!(truncation_rank(&[2.0, 1.0, 1.0, 0.5], &nodeg, 0.0).unwrap().kept, 2);

        assert!(truncation_rank(&[1.0, 2.0], &TruncationSpec::default(), 0.0).is_err());
    }

    #[test]
    fn truncation_minm_and_nozeros() {
        let spec = TruncationSpec {
            m: 1,
            minm: 3,
            ..Default::default()
        };
        assert_eq!(truncation_rank(&[5.0, 1.0, 0.5, 0.1], &spec, 0.0).unwrap().kept, 3);
        let nz = TruncationSpec {
            minm: 4,
            nozeros: true,
            ..Default::default()
        };
        assert_eq!(truncation_rank(&[5.0, 1.0, 1e-20, 0.0], &nz, 0.0).unwrap().kept, 2);
        let cut = TruncationSpec {
            cutoff: 0.05,
            ..Default::default()
        };
        // weights 16, 4, 1 over 21: dropping 1 is 0.048 ≤ 0.05, dropping 4+1 is not
        assert_eq!(truncation_rank(&[4.0, 2.0, 1.0], &cut, 0.0).unwrap().kept, 2);
    }

    #[test]
    fn svd_diagonal_by_hand() {
        let m = DenseTensor::<f64>::diag(&[3.0, 4.0]);
        let spec = TruncationSpec { m: 1, ..Default::default() };
        let s = svd(&m, &spec, SvdOptions::default()).unwrap();
        assert_eq!(s.d.len(), 1);
        assert!((s.d[0] - 4.0).abs() < 1e-15);
        assert!((s.truncerr - 9.0 / 25.0).abs() < 1e-15);
        assert!((s.mag - 5.0).abs() < 1e-15);

        let id = DenseTensor::<f64>::diag(&[1.0; 5]);
        let s = svd(&id, &TruncationSpec::default(), SvdOptions::default()).unwrap();
        assert!(s.d.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert_eq!(s.truncerr, 0.0);
    }

    #[test]
    fn svd_supplied_mag_is_used_verbatim() {
        let m = DenseTensor::<f64>::diag(&[3.0, 4.0]);
        let s = svd(&m, &TruncationSpec::default(), SvdOptions { mag: 10.0, recursive: false }).unwrap();
        assert_eq!(s.mag, 10.0);
    }

    #[test]
    fn complex_svd_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = DenseTensor::<Complex64>::random(&[6, 4], &mut rng);
        let s = svd(&m, &TruncationSpec::default(), SvdOptions::default()).unwrap();
        let u = mat(&s.u);
        let v = mat(&s.v);
        assert!(DenseTensor::from_matrix(u.adjoint() * &u).is_identity(1e-12));
        assert!(DenseTensor::from_matrix(&v * v.adjoint()).is_identity(1e-12));
        assert!((rebuild(&s) - mat(&m)).norm() < 1e-12 * m.norm());
        assert!(s.d.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn grouped_svd_restores_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let t = DenseTensor::<f64>::random(&[2, 3, 4], &mut rng);
        let s = svd_grouped(&t, &[vec![1, 2], vec![3]], &TruncationSpec::default(), SvdOptions::default()).unwrap();
        assert_eq!(s.u.shape(), &[2, 3, 4]);
        assert_eq!(s.v.shape(), &[4, 4]);
        let back = crate::contraction::contract(&s.ud(), &[3], &s.v, &[1]).unwrap();
        assert!(back.max_abs_diff(&t) < 1e-12);
        assert!(svd_grouped(&t, &[vec![1], vec![3]], &TruncationSpec::default(), SvdOptions::default()).is_err());
    }

    #[test]
    fn phases_are_pinned() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = DenseTensor::<Complex64>::random(&[4, 4], &mut rng);
        let s = svd(&m, &TruncationSpec::default(), SvdOptions::default()).unwrap();
        let u = mat(&s.u);
        for j in 0..u.ncols() {
            let pivot = u.column(j).iter().copied().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap();
            assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
        }
        let id = qr(&DenseTensor::<f64>::diag(&[1.0; 3])).unwrap();
        assert!(id.left.is_identity(1e-15));
        assert!(id.right.is_identity(1e-15));
    }

    #[test]
    fn recursive_svd_cases() {
        let id = DenseTensor::<f64>::diag(&[1.0; 3]);
        let r = recursive_svd(&id, 1e-4).unwrap();
        let p = svd(&id, &TruncationSpec::default(), SvdOptions::default()).unwrap();
        assert_eq!(r.d, p.d);

        let d = DenseTensor::<f64>::diag(&[1.0, 1e-8]);
        let r = recursive_svd(&d, 1e-4).unwrap();
        assert!((r.d[0] - 1.0).abs() < 1e-6);
        assert!((r.d[1] - 1e-8).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let m = DenseTensor::<f64>::random(&[8, 8], &mut rng);
        let r = recursive_svd(&m, 1e-1).unwrap();
        assert!((rebuild(&r) - mat(&m)).norm() < 1e-10);
        let plain = svd(&m, &TruncationSpec::default(), SvdOptions::default()).unwrap();
        for (a, b) in r.d.iter().zip(&plain.d) {
            assert!((a - b).abs() < 1e-10);
        }
        let via_option = svd(&m, &TruncationSpec::default(), SvdOptions { mag: 0.0, recursive: true }).unwrap();
        assert!((rebuild(&via_option) - mat(&m)).norm() < 1e-10);
    }

    #[test]
    fn recursive_svd_wide_dynamic_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let a = DenseTensor::<f64>::random(&[6, 6], &mut rng);
        let (q1, _) = raw_qr(mat(&a));
        let b = DenseTensor::<f64>::random(&[6, 6], &mut rng);
        let (q2, _) = raw_qr(mat(&b));
        let spectrum = [1.0, 1e-3, 1e-6, 1e-9, 1e-12, 1e-14];
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&spectrum));
        let m = DenseTensor::from_matrix(&q1 * d * q2.transpose());
        let r = recursive_svd(&m, 1e-4).unwrap();
        for (got, want) in r.d.iter().zip(spectrum) {
            assert!(((got - want) / want).abs() < 1e-2, "{got} vs {want}");
        }
    }

    #[test]
    fn eigen_cases() {
        let e = eigen(&DenseTensor::diag(&[1.0, 2.0]), &TruncationSpec::eigen(), None).unwrap();
        assert_eq!(e.d, vec![2.0, 1.0]);
        let want = DenseTensor::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(e.u.max_abs_diff(&want) < 1e-15);

        let px = DenseTensor::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = eigen(&px, &TruncationSpec::eigen(), None).unwrap();
        assert!((e.d[0] - 1.0).abs() < 1e-15 && (e.d[1] + 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let r = DenseTensor::<f64>::random(&[4, 4], &mut rng);
        let h = &r + &r.permute(&[2, 1]).unwrap();
        let plain = eigen(&h, &TruncationSpec::eigen(), None).unwrap();
        let two = DenseTensor::diag(&[2.0; 4]);
        let gen = eigen(&h, &TruncationSpec::eigen(), Some(&two)).unwrap();
        for (a, b) in plain.d.iter().zip(&gen.d) {
            assert!((a / 2.0 - b).abs() < 1e-12);
        }
        // H U = B U D
        let lhs = mat(&h) * mat(&gen.u);
        let rhs = mat(&two) * mat(&gen.u) * mat(&gen.d_matrix());
        assert!((lhs - rhs).norm() < 1e-12);

        let nonherm = DenseTensor::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(eigen(&nonherm, &TruncationSpec::eigen(), None).is_err());
        let singular = DenseTensor::diag(&[1.0, 0.0, 1.0, 1.0]);
        assert!(eigen(&h, &TruncationSpec::eigen(), Some(&singular)).is_err());
    }

    #[test]
    fn eigen_grouped_restores_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let r = DenseTensor::<Complex64>::random(&[6, 6], &mut rng);
        let h = &r + &r.permute(&[2, 1]).unwrap().conj();
        let h4 = h.reshape(&[2, 3, 2, 3]).unwrap();
        let e = eigen_grouped(&h4, &[vec![1, 2], vec![3, 4]], &TruncationSpec::eigen(), None).unwrap();
        assert_eq!(e.u.shape(), &[2, 3, 6]);
        let u = e.u.reshape(&[6, 6]).unwrap();
        let back = mat(&u) * mat(&e.d_matrix()) * mat(&u).adjoint();
        assert!((back - mat(&h)).norm() < 1e-12);
    }

    #[test]
    fn qr_lq_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let m = DenseTensor::<f64>::random(&[6, 3], &mut rng);
        let f = qr(&m).unwrap();
        let q = mat(&f.left);
        assert!(DenseTensor::from_matrix(q.transpose() * &q).is_identity(1e-12));
        assert_eq!((f.truncerr, f.mag), (0.0, 1.0));
        let l = lq(&m).unwrap();
        let lm = mat(&l.left);
        for i in 0..lm.nrows() {
            for j in (i + 1)..lm.ncols() {
                assert!(lm[(i, j)].abs() < 1e-12);
            }
        }
        assert!((&lm * mat(&l.right) - mat(&m)).norm() < 1e-12);
    }

    #[test]
    fn polar_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let r = DenseTensor::<f64>::random(&[4, 4], &mut rng);
        let (q, _) = raw_qr(mat(&r));
        let unitary = DenseTensor::from_matrix(q);
        let g = [vec![1], vec![2]];
        let f = polar(&unitary, &g, false, None, &TruncationSpec::default()).unwrap();
        assert!(f.left.is_identity(1e-12));
        assert!(f.right.max_abs_diff(&unitary) < 1e-12);

        let a = DenseTensor::<Complex64>::random(&[3, 5], &mut rng);
        for right in [false, true] {
            let f = polar(&a, &g, right, None, &TruncationSpec::default()).unwrap();
            let back = mat(&f.left) * mat(&f.right);
            assert!((back - mat(&a)).norm() < 1e-12);
        }
        let lf = polar(&a, &g, false, None, &TruncationSpec::default()).unwrap();
        assert_eq!(lf.left.shape(), &[3, 3]);
        let rf = polar(&a, &g, true, None, &TruncationSpec::default()).unwrap();
        assert_eq!(rf.right.shape(), &[5, 5]);

        let two = DenseTensor::from_vec(vec![1, 1], vec![2.0]).unwrap();
        let l = polar(&two, &g, false, None, &TruncationSpec::default()).unwrap();
        assert_eq!((l.left.data()[0], l.right.data()[0]), (2.0, 1.0));
        let r = polar(&two, &g, true, None, &TruncationSpec::default()).unwrap();
        assert_eq!((r.left.data()[0], r.right.data()[0]), (1.0, 2.0));

        let capped = polar(&a, &g, false, Some(1), &TruncationSpec::default()).unwrap();
        assert!(capped.truncerr > 0.0);
    }

    proptest! {
        #[test]
        fn svd_reconstruction_and_accounting(rows in 1usize..7, cols in 1usize..7, m in 1usize..5, seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DenseTensor::<Complex64>::random(&[rows, cols], &mut rng);
            let full = svd(&a, &TruncationSpec::default(), SvdOptions::default()).unwrap();
            prop_assert!((rebuild(&full) - mat(&a)).norm() <= 1e-12 * a.norm().max(1.0));
            let spec = TruncationSpec { m, ..Default::default() };
            let t = svd(&a, &spec, SvdOptions::default()).unwrap();
            let kept: f64 = t.d.iter().map(|x| x * x).sum();
            prop_assert!((1.0 - kept / (t.mag * t.mag) - t.truncerr).abs() < 1e-12);
            let larger = svd(&a, &TruncationSpec { m: m + 1, ..Default::default() }, SvdOptions::default()).unwrap();
            prop_assert!(larger.truncerr <= t.truncerr + 1e-15);
        }

        #[test]
        fn minm_floor(minm in 0usize..6, seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = rng.random_range(1..6);
            let a = DenseTensor::<f64>::random(&[rows, 4], &mut rng);
            let spec = TruncationSpec { m: 1, minm, ..Default::default() };
            let t = svd(&a, &spec, SvdOptions::default()).unwrap();
            prop_assert!(t.d.len() >= minm.min(rows.min(4)));
        }

        #[test]
        fn keepdeg_never_keeps_fewer(vals in prop::collection::vec(0u8..4, 1..8), m in 1usize..5) {
            let mut v: Vec<f64> = vals.iter().map(|&x| x as f64).collect();
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let plain = TruncationSpec { m, ..Default::default() };
            let deg = TruncationSpec { keepdeg: true, ..plain.clone() };
            let a = truncation_rank(&v, &plain, 0.0).unwrap().kept;
            let b = truncation_rank(&v, &deg, 0.0).unwrap().kept;
            prop_assert!(b >= a);
        }

        #[test]
        fn qr_lq_random_shapes(rows in 1usize..7, cols in 1usize..7, seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DenseTensor::<Complex64>::random(&[rows, cols], &mut rng);
            let f = qr(&a).unwrap();
            let q = mat(&f.left);
            let r = mat(&f.right);
            prop_assert!(DenseTensor::from_matrix(q.adjoint() * &q).is_identity(1e-12));
            for i in 0..r.nrows() { for j in 0..i.min(r.ncols()) { prop_assert!(r[(i, j)].norm() < 1e-12); } }
            prop_assert!((&q * &r - mat(&a)).norm() < 1e-12);
            let g = lq(&a).unwrap();
            let l = mat(&g.left);
            let q = mat(&g.right);
            prop_assert!(DenseTensor::from_matrix(&q * q.adjoint()).is_identity(1e-12));
            for i in 0..l.nrows() { for j in (i + 1)..l.ncols() { prop_assert!(l[(i, j)].norm() < 1e-12); } }
            prop_assert!((&l * &q - mat(&a)).norm() < 1e-12);
        }

        #[test]
        fn eigen_reconstruction(n in 1usize..7, seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = DenseTensor::<Complex64>::random(&[n, n], &mut rng);
            let h = &r + &r.permute(&[2, 1]).unwrap().conj();
            let e = eigen(&h, &TruncationSpec::eigen(), None).unwrap();
            let u = mat(&e.u);
            prop_assert!((&u * mat(&e.d_matrix()) * u.adjoint() - mat(&h)).norm() < 1e-12 * h.norm().max(1.0));
            prop_assert!(e.d.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}

use rand::Rng;

use crate::contraction::{contract, contract_with, ContractionSpec};
use crate::decomposition::{qr_grouped, svd_grouped, SvdOptions, TruncationSpec};
use crate::error::{arg_err, shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

use super::{move_center, SiteChain, MPS};

/// Largest dense dimension [`full_psi`] and [`full_h`] will build.
pub const FULL_DIM_CAP: usize = 1 << 20;

/// Which basis state each site of a [`product_mps`] takes.
pub enum ProductState<'a, R: Rng + ?Sized> {
    /// The first basis state on every site.
    First,
    /// A uniformly random basis state per site.
    Random(&'a mut R),
}

fn cyclic_dims(phys_dims: &[usize], ns: usize) -> Result<Vec<usize>> {
    if ns == 0 {
        return Err(arg_err("a chain needs at least one site"));
    }
    if phys_dims.is_empty() || phys_dims.contains(&0) {
        return Err(arg_err(format!("invalid physical dimensions {phys_dims:?}")));
    }
    Ok((0..ns).map(|i| phys_dims[i % phys_dims.len()]).collect())
}

/// Normalized product state with unit links. `phys_dims` is cycled over the
/// sites.
pub fn product_mps<T: Scalar, R: Rng + ?Sized>(
    phys_dims: &[usize],
    ns: usize,
    which: ProductState<'_, R>,
) -> Result<MPS<T>> {
    let dims = cyclic_dims(phys_dims, ns)?;
    let mut rng = match which {
        ProductState::First => None,
        ProductState::Random(r) => Some(r),
    };
    let tensors = dims
        .iter()
        .map(|&d| {
            let k = rng.as_mut().map_or(0, |r| r.random_range(0..d));
            let mut t = DenseTensor::zeros(&[1, d, 1]);
            t.data_mut()[k] = T::one();
            t
        })
        .collect();
    MPS::new(tensors, Some(1))
}

/// Random normalized MPS with bond dimensions up to `bond`, right-normalized
/// with the center on site 1.
pub fn random_mps<T: Scalar, R: Rng + ?Sized>(
    phys_dims: &[usize],
    ns: usize,
    bond: usize,
    rng: &mut R,
) -> Result<MPS<T>> {
    if bond == 0 {
        return Err(arg_err("bond dimension must be positive"));
    }
    let dims = cyclic_dims(phys_dims, ns)?;
    // link k sits between sites k and k+1; cap by the Hilbert space on each side
    let mut links = vec![1usize; ns + 1];
    for k in 1..ns {
        let left: usize = dims[..k].iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
        let right: usize = dims[k..].iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
        links[k] = bond.min(left).min(right);
    }
    let tensors = (0..ns)
        .map(|i| DenseTensor::random(&[links[i], dims[i], links[i + 1]], rng))
        .collect();
    let mut psi: MPS<T> = MPS::new(tensors, Some(ns))?;
    move_center(&mut psi, 1, &TruncationSpec::default())?;
    let n = psi.tensor(1).norm().re_f64();
    if n == 0.0 {
        return Err(arg_err("random state has zero norm"));
    }
    let mut first = psi.tensor(1).clone();
    first.div_by(T::of(n));
    psi.set_site(1, first)?;
    Ok(psi)
}

/// MPS of a full state vector ordered with site 1 fastest. Successive QR
/// splits are used (SVD when `trunc` can drop values); the result is not
/// renormalized and has its center on the last site.
pub fn make_mps<T: Scalar>(v: &[T], phys_dims: &[usize], ns: usize, trunc: &TruncationSpec) -> Result<MPS<T>> {
    let dims = cyclic_dims(phys_dims, ns)?;
    let total: usize = dims.iter().product();
    if v.len() != total {
        return Err(shape_err(format!(
            "vector of length {} does not match physical dimensions with product {total}",
            v.len()
        )));
    }
    let mut tensors = Vec::with_capacity(ns);
    let mut rest = DenseTensor::from_vec(vec![1, total], v.to_vec())?;
    let mut link = 1;
    for &d in &dims[..ns - 1] {
        let cols = rest.len() / (link * d);
        let m = rest.reshape(&[link, d, cols])?;
        let (left, right) = if trunc.is_lossless_for(link * d, cols) {
            let f = qr_grouped(&m, &[vec![1, 2], vec![3]])?;
            drop_zero_rows(f.left, f.right)?
        } else {
            let s = svd_grouped(&m, &[vec![1, 2], vec![3]], trunc, SvdOptions::default())?;
            let dv = s.dv();
            (s.u, dv)
        };
        link = left.dim(3);
        tensors.push(left);
        rest = right;
    }
    tensors.push(rest.reshape(&[link, dims[ns - 1], 1])?);
    MPS::new(tensors, Some(ns))
}

/// Removes rows of `r` that are exactly zero together with the matching
/// columns of `q`, so product states come out with unit links.
fn drop_zero_rows<T: Scalar>(q: DenseTensor<T>, r: DenseTensor<T>) -> Result<(DenseTensor<T>, DenseTensor<T>)> {
    let (k, cols) = (r.dim(1), r.dim(2));
    let keep: Vec<usize> = (0..k)
        .filter(|&a| (0..cols).any(|b| r.data()[a + k * b] != T::zero()))
        .collect();
    if keep.len() == k || keep.is_empty() {
        return Ok((q, r));
    }
    let (l, d) = (q.dim(1), q.dim(2));
    let q2 = DenseTensor::from_fn(&[l, d, keep.len()], |p| q.data()[(p[0] - 1) + l * ((p[1] - 1) + d * keep[p[2] - 1])]);
    let r2 = DenseTensor::from_fn(&[keep.len(), cols], |p| r.data()[keep[p[0] - 1] + k * (p[1] - 1)]);
    Ok((q2, r2))
}

/// Dense state vector with site 1 fastest.
pub fn full_psi<T: Scalar, S: SiteChain<T> + ?Sized>(psi: &S) -> Result<DenseTensor<T>> {
    let n = psi.len();
    let mut dim = 1usize;
    for i in 1..=n {
        dim = dim.saturating_mul(psi.site(i)?.dim(2));
    }
    if dim > FULL_DIM_CAP {
        return Err(arg_err(format!("full state of dimension {dim} exceeds the cap {FULL_DIM_CAP}")));
    }
    let first = psi.site(1)?;
    let mut acc = first.reshape(&[first.dim(2), first.dim(3)])?;
    for i in 2..=n {
        let next = contract(&acc, &[2], &*psi.site(i)?, &[1])?;
        let (a, d, r) = (next.dim(1), next.dim(2), next.dim(3));
        acc = next.reshape(&[a * d, r])?;
    }
    let len = acc.len();
    acc.reshape(&[len])
}

/// Dense operator matrix with the same basis ordering as [`full_psi`].
pub fn full_h<T: Scalar, M: SiteChain<T> + ?Sized>(mpo: &M) -> Result<DenseTensor<T>> {
    let n = mpo.len();
    let mut dim = 1usize;
    for i in 1..=n {
        dim = dim.saturating_mul(mpo.site(i)?.dim(2));
    }
    if dim > FULL_DIM_CAP {
        return Err(arg_err(format!("full operator of dimension {dim} exceeds the cap {FULL_DIM_CAP}")));
    }
    let first = mpo.site(1)?;
    // acc axes: (out, in, link)
    let mut acc = first.reshape(&[first.dim(2), first.dim(3), first.dim(4)])?;
    for i in 2..=n {
        let w = mpo.site(i)?;
        // (O, I, o, i, k) -> (O, o, I, i, k)
        let next = contract_with(&ContractionSpec::new(&[3], &[1]).order(&[1, 3, 2, 4, 5]), &acc, &w)?;
        let s = next.shape().to_vec();
        acc = next.reshape(&[s[0] * s[1], s[2] * s[3], s[4]])?;
    }
    acc.reshape(&[acc.dim(1), acc.dim(2)])
}

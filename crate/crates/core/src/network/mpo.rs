use crate::contraction::contract_with;
use crate::contraction::ContractionSpec;
use crate::error::{arg_err, shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::{join_index, DenseTensor, IndexSelector};

use super::{collect_sites, SiteChain, MPO};

/// Operator-valued `k × k` matrix: `blocks[a][b]` is the `d × d` operator in
/// row `a`, column `b`.
pub type OperatorMatrix<T> = Vec<Vec<DenseTensor<T>>>;

/// Rank-4 bulk tensor `W[a, σ', σ, b] = blocks[a][b][σ', σ]`.
fn bulk_tensor<T: Scalar>(blocks: &OperatorMatrix<T>) -> Result<DenseTensor<T>> {
    let k = blocks.len();
    if k == 0 || blocks.iter().any(|row| row.len() != k) {
        return Err(shape_err("operator matrix must be square and nonempty"));
    }
    let d = blocks[0][0].dim(1);
    for (a, row) in blocks.iter().enumerate() {
        for (b, op) in row.iter().enumerate() {
            if op.shape() != [d, d] {
                return Err(shape_err(format!(
                    "block ({}, {}) has shape {:?}, expected [{d}, {d}]",
                    a + 1,
                    b + 1,
                    op.shape()
                )));
            }
        }
    }
    Ok(DenseTensor::from_fn(&[k, d, d, k], |p| {
        blocks[p[0] - 1][p[3] - 1].data()[(p[1] - 1) + (p[2] - 1) * d]
    }))
}

fn edge_slices<T: Scalar>(w: &DenseTensor<T>, site: usize, ns: usize, lower: bool) -> Result<DenseTensor<T>> {
    use IndexSelector::{At, Full};
    let k = w.dim(1);
    let (start, finish) = if lower { (k, 1) } else { (1, k) };
    let mut t = w.clone();
    if site == 1 {
        t = t.get_slice(&[At(start), Full, Full, Full])?.into_tensor();
        let s = t.shape().to_vec();
        t = t.reshape(&[1, s[0], s[1], s[2]])?;
    }
    if site == ns {
        let s = t.shape().to_vec();
        t = t.get_slice(&[Full, Full, Full, At(finish)])?.into_tensor();
        t = t.reshape(&[s[0], s[1], s[2], 1])?;
    }
    Ok(t)
}

/// MPO from one bulk operator matrix repeated on every site.
///
/// With `lower` (the default convention) the matrix is lower triangular:
/// the first site takes its last row and the last site its first column.
/// `lower = false` takes the first row and last column instead.
pub fn make_mpo<T: Scalar>(blocks: &OperatorMatrix<T>, ns: usize, lower: bool) -> Result<MPO<T>> {
    let w = bulk_tensor(blocks)?;
    make_mpo_from_fn(ns, lower, |_| Ok(w.clone()))
}

/// MPO from a site-dependent bulk tensor `W[a, σ', σ, b]`. The bond
/// dimension and physical dimension may change from site to site as long as
/// neighbouring links agree.
pub fn make_mpo_from_fn<T: Scalar>(
    ns: usize,
    lower: bool,
    mut bulk: impl FnMut(usize) -> Result<DenseTensor<T>>,
) -> Result<MPO<T>> {
    if ns == 0 {
        return Err(arg_err("a chain needs at least one site"));
    }
    let mut tensors = Vec::with_capacity(ns);
    for i in 1..=ns {
        let w = bulk(i)?;
        if w.rank() != 4 || w.dim(1) != w.dim(4) {
            return Err(shape_err(format!(
                "bulk tensor at site {i} has shape {:?}; expected (k, d, d, k)",
                w.shape()
            )));
        }
        tensors.push(edge_slices(&w, i, ns, lower)?);
    }
    MPO::new(tensors)
}

/// Site-dependent form of [`make_mpo`] taking operator matrices.
pub fn make_mpo_from_blocks<T: Scalar>(
    ns: usize,
    lower: bool,
    mut blocks: impl FnMut(usize) -> Result<OperatorMatrix<T>>,
) -> Result<MPO<T>> {
    make_mpo_from_fn(ns, lower, |i| bulk_tensor(&blocks(i)?))
}

/// MPO from a flat `(k·d) × (k·d)` matrix whose `d × d` blocks are the
/// operator entries; `phys_dims` is cycled over the sites and each entry must
/// divide the matrix size into the same `k`.
pub fn make_mpo_flat<T: Scalar>(matrix: &DenseTensor<T>, phys_dims: &[usize], ns: usize, lower: bool) -> Result<MPO<T>> {
    if matrix.rank() != 2 || matrix.dim(1) != matrix.dim(2) {
        return Err(shape_err(format!("flat MPO matrix must be square, got {:?}", matrix.shape())));
    }
    if phys_dims.is_empty() {
        return Err(arg_err("no physical dimensions given"));
    }
    let n = matrix.dim(1);
    make_mpo_from_fn(ns, lower, |i| {
        let d = phys_dims[(i - 1) % phys_dims.len()];
        if d == 0 || n % d != 0 {
            return Err(shape_err(format!("matrix size {n} is not a multiple of physical dimension {d}")));
        }
        let k = n / d;
        Ok(DenseTensor::from_fn(&[k, d, d, k], |p| {
            let row = (p[0] - 1) * d + (p[1] - 1);
            let col = (p[3] - 1) * d + (p[2] - 1);
            matrix.data()[row + col * n]
        }))
    })
}

/// `H + λ|ψ₀⟩⟨ψ₀|` as one MPO, built as a direct sum of `H` and the
/// projector MPO of `ψ₀`. The bond dimension grows by `D(ψ₀)²`.
pub fn penalty_mpo<T, M, S>(h: &M, lambda: T, psi0: &S) -> Result<MPO<T>>
where
    T: Scalar,
    M: SiteChain<T> + ?Sized,
    S: SiteChain<T> + ?Sized,
{
    let ns = h.len();
    if psi0.len() != ns {
        return Err(shape_err("state and operator have different lengths"));
    }
    let hs = collect_sites(h)?;
    let mut out = Vec::with_capacity(ns);
    for (i, w) in hs.into_iter().enumerate() {
        let a = psi0.site(i + 1)?;
        if a.dim(2) != w.dim(2) {
            return Err(shape_err(format!("physical dimension mismatch at site {}", i + 1)));
        }
        // (l, σ, r) ⊗ conj(l', σ', r') -> (l, l', σ, σ', r, r')
        let spec = ContractionSpec::new(&[], &[]).conj(false, true).order(&[1, 4, 2, 5, 3, 6]);
        let outer = contract_with(&spec, &a, &a)?;
        let s = outer.shape().to_vec();
        let mut p = outer.reshape(&[s[0] * s[1], s[2], s[3], s[4] * s[5]])?;
        if i == 0 {
            p.mult(lambda);
        }
        let joined = match (ns, i) {
            (1, _) => &w + &p,
            (_, 0) => join_index(&w, &p, &[4])?,
            (_, i) if i == ns - 1 => join_index(&w, &p, &[1])?,
            _ => join_index(&w, &p, &[1, 4])?,
        };
        out.push(joined);
    }
    MPO::new(out)
}

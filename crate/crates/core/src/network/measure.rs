use std::borrow::Cow;

use crate::contraction::{contract, contract_with, ContractionSpec};
use crate::decomposition::{svd_grouped, SvdOptions, TruncationSpec};
use crate::error::{arg_err, shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

use super::{
    check_site, env_update, gauge_move, make_boundary, Direction, SiteChain, StateChain, MPS,
};

/// `op · A` over the physical axis, keeping the `(l, σ, r)` layout.
fn apply_op<T: Scalar>(op: &DenseTensor<T>, a: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    if op.rank() != 2 || op.dim(2) != a.dim(2) {
        return Err(shape_err(format!(
            "operator of shape {:?} cannot act on physical dimension {}",
            op.shape(),
            a.dim(2)
        )));
    }
    contract_with(&ContractionSpec::new(&[2], &[2]).order(&[2, 1, 3]), op, a)
}

/// Applies single-site operators in place. The center is left where it was;
/// non-unitary operators break the gauge at the sites they touch.
pub fn apply_site_ops_in_place<T: Scalar, S: SiteChain<T> + ?Sized>(
    psi: &mut S,
    sites: &[usize],
    ops: &[&DenseTensor<T>],
) -> Result<()> {
    if sites.len() != ops.len() {
        return Err(arg_err(format!("{} sites but {} operators", sites.len(), ops.len())));
    }
    for (&i, op) in sites.iter().zip(ops) {
        check_site(i, psi.len())?;
        let next = apply_op(op, &*psi.site(i)?)?;
        psi.set_site(i, next)?;
    }
    Ok(())
}

pub fn apply_site_ops<T: Scalar>(psi: &MPS<T>, sites: &[usize], ops: &[&DenseTensor<T>]) -> Result<MPS<T>> {
    let mut out = psi.clone();
    apply_site_ops_in_place(&mut out, sites, ops)?;
    Ok(out)
}

/// `W|ψ⟩` as an MPS. The exact product (bond `D_W·D_ψ`) is formed site by
/// site, brought to right-canonical form without loss, and then split again
/// left to right by truncated SVDs whose `D·V†` is contracted onto the next
/// site. The center ends on the last site.
pub fn apply_mpo<T, M, S>(mpo: &M, psi: &S, trunc: &TruncationSpec) -> Result<MPS<T>>
where
    T: Scalar,
    M: SiteChain<T> + ?Sized,
    S: SiteChain<T> + ?Sized,
{
    let n = psi.len();
    if mpo.len() != n {
        return Err(shape_err("operator and state have different lengths"));
    }
    let mut sites = Vec::with_capacity(n);
    for i in 1..=n {
        let w = mpo.site(i)?;
        let a = psi.site(i)?;
        if w.dim(3) != a.dim(2) {
            return Err(shape_err(format!("physical dimension mismatch at site {i}")));
        }
        // (w, σ', w', l, r) -> (w, l, σ', w', r)
        let c = contract_with(&ContractionSpec::new(&[3], &[2]).order(&[1, 4, 2, 3, 5]), &w, &a)?;
        let s = c.shape().to_vec();
        sites.push(c.reshape(&[s[0] * s[1], s[2], s[3] * s[4]])?);
    }
    let mut out = MPS::new(sites, Some(n))?;
    let lossless = TruncationSpec::default();
    while out.center() > 1 {
        gauge_move(&mut out, Direction::Left, &lossless)?;
    }
    for i in 1..n {
        let a = out.site(i)?.into_owned();
        let d = svd_grouped(&a, &[vec![1, 2], vec![3]], trunc, SvdOptions::default())?;
        let next = contract(&d.dv(), &[2], &*out.site(i + 1)?, &[1])?;
        out.set_site(i, d.u)?;
        out.set_site(i + 1, next)?;
    }
    out.set_center(n)?;
    Ok(out)
}

/// Plain (operator-free) right environments: `r[i]` contracts sites `> i`.
fn plain_right_envs<T: Scalar, S: SiteChain<T> + ?Sized>(psi: &S) -> Result<Vec<DenseTensor<T>>> {
    let n = psi.len();
    let mut r = vec![make_boundary::<T>(0); n + 1];
    for i in (2..=n).rev() {
        r[i - 1] = env_update(Direction::Right, &r[i], None, &*psi.site(i)?, &[])?;
    }
    Ok(r)
}

fn close<T: Scalar>(l: &DenseTensor<T>, r: &DenseTensor<T>) -> Result<T> {
    crate::contraction::scalar_contract(l, r, false, false)
}

fn check_op<T: Scalar>(op: &DenseTensor<T>, d: usize, what: &str) -> Result<()> {
    if op.shape() != [d, d] {
        return Err(shape_err(format!(
            "{what} has shape {:?}; physical dimension is {d}",
            op.shape()
        )));
    }
    Ok(())
}

/// `M[i, j] = ⟨ψ|A_i B_j|ψ⟩` for all site pairs.
///
/// With a parity operator `F`, Jordan–Wigner strings are inserted: for
/// `i < j` site `i` carries `A·F` and the sites between carry `F`; for
/// `i > j` site `j` carries `F·B`. Every row reuses one left environment and
/// extends it site by site, so the cost is `O(Ns²)` transfer steps.
pub fn correlation_matrix<T, S>(
    psi: &S,
    a: &DenseTensor<T>,
    b: &DenseTensor<T>,
    parity: Option<&DenseTensor<T>>,
) -> Result<DenseTensor<T>>
where
    T: Scalar,
    S: SiteChain<T> + ?Sized,
{
    let n = psi.len();
    let sites: Vec<Cow<'_, DenseTensor<T>>> = (1..=n).map(|i| psi.site(i)).collect::<Result<_>>()?;
    for s in &sites {
        check_op(a, s.dim(2), "first operator")?;
        check_op(b, s.dim(2), "second operator")?;
        if let Some(f) = parity {
            check_op(f, s.dim(2), "parity operator")?;
        }
    }
    let right = plain_right_envs(psi)?;
    let mut out = DenseTensor::zeros(&[n, n]);
    let mut left = make_boundary::<T>(0);
    let upd = |env: &DenseTensor<T>, site: &DenseTensor<T>, op: Option<&DenseTensor<T>>| -> Result<DenseTensor<T>> {
        match op {
            Some(o) => env_update(Direction::Left, env, Some(site), &apply_op(o, site)?, &[]),
            None => env_update(Direction::Left, env, None, site, &[]),
        }
    };
    let mm = |x: &DenseTensor<T>, y: &DenseTensor<T>| x.matmul(y);
    for i in 1..=n {
        let s = &sites[i - 1];
        // diagonal
        let ab = mm(a, b)?;
        out.set_element(&[i, i], close(&upd(&left, s, Some(&ab))?, &right[i])?)?;
        // i < j: A (·F) at i, then strings, then B at j
        let first = match parity {
            Some(f) => mm(a, f)?,
            None => a.clone(),
        };
        let mut run = upd(&left, s, Some(&first))?;
        for j in i + 1..=n {
            let sj = &sites[j - 1];
            out.set_element(&[i, j], close(&upd(&run, sj, Some(b))?, &right[j])?)?;
            if j < n {
                run = upd(&run, sj, parity)?;
            }
        }
        // i plays the role of j for the lower triangle: B (F·B) at i, A later
        let first = match parity {
            Some(f) => mm(f, b)?,
            None => b.clone(),
        };
        let mut run = upd(&left, s, Some(&first))?;
        for j in i + 1..=n {
            let sj = &sites[j - 1];
            out.set_element(&[j, i], close(&upd(&run, sj, Some(a))?, &right[j])?)?;
            if j < n {
                run = upd(&run, sj, parity)?;
            }
        }
        left = upd(&left, s, None)?;
    }
    Ok(out)
}

/// Advances a nondecreasing position tuple like an odometer, incrementing
/// the last entry first. Returns `false` once the last tuple `(Ns, …, Ns)`
/// has been passed, leaving `pos` unchanged.
pub fn next_operator_positions(pos: &mut [usize], ns: usize) -> bool {
    let Some(k) = pos.iter().rposition(|&p| p < ns) else {
        return false;
    };
    pos[k] += 1;
    let v = pos[k];
    for p in &mut pos[k + 1..] {
        *p = v;
    }
    true
}

/// Every permutation of `items` by Heap's algorithm. At most 8 items.
pub fn heap_permutations<U: Clone>(items: &[U]) -> Result<Vec<Vec<U>>> {
    if items.len() > 8 {
        return Err(arg_err(format!("{} items exceed the permutation limit of 8", items.len())));
    }
    let mut a = items.to_vec();
    let n = a.len();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(out)
}

/// On-site operator for `site` given each operator's position: the ordered
/// product over `n` of `op_n` (at its own site), `F` (before it, when a
/// parity operator is supplied) or the identity.
fn string_operator<T: Scalar>(
    site: usize,
    positions: &[usize],
    ops: &[&DenseTensor<T>],
    parity: Option<&DenseTensor<T>>,
) -> Result<Option<DenseTensor<T>>> {
    let mut acc: Option<DenseTensor<T>> = None;
    for (n, &p) in positions.iter().enumerate() {
        let x = if p == site {
            Some(ops[n])
        } else if site < p {
            parity
        } else {
            None
        };
        if let Some(x) = x {
            acc = Some(match acc {
                None => x.clone(),
                Some(m) => m.matmul(x)?,
            });
        }
    }
    Ok(acc)
}

/// `T[i₁, …, i_k] = ⟨ψ|op₁(i₁)⋯op_k(i_k)|ψ⟩` for every index tuple.
///
/// Positions are enumerated as nondecreasing placements combined with every
/// permutation of the operators; along one enumeration the left
/// environments up to the first changed position are reused. Parity strings
/// follow the same rule as [`correlation_matrix`].
pub fn correlation<T, S>(psi: &S, ops: &[&DenseTensor<T>], parity: Option<&DenseTensor<T>>) -> Result<DenseTensor<T>>
where
    T: Scalar,
    S: SiteChain<T> + ?Sized,
{
    let k = ops.len();
    if k == 0 {
        return Err(arg_err("correlation needs at least one operator"));
    }
    let n = psi.len();
    let sites: Vec<Cow<'_, DenseTensor<T>>> = (1..=n).map(|i| psi.site(i)).collect::<Result<_>>()?;
    for s in &sites {
        for op in ops {
            check_op(op, s.dim(2), "operator")?;
        }
        if let Some(f) = parity {
            check_op(f, s.dim(2), "parity operator")?;
        }
    }
    let right = plain_right_envs(psi)?;
    let shape = vec![n; k];
    let mut out = DenseTensor::zeros(&shape);
    let mut done = vec![false; out.len()];
    let perms = heap_permutations(&(0..k).collect::<Vec<_>>())?;
    for perm in &perms {
        // left[s] = environment after sites 1..=s
        let mut left: Vec<DenseTensor<T>> = vec![make_boundary::<T>(0)];
        let mut q = vec![1usize; k];
        let mut valid = 0usize;
        loop {
            let mut positions = vec![0usize; k];
            for (slot, &opi) in perm.iter().enumerate() {
                positions[opi] = q[slot];
            }
            let lin = crate::tensor::linear_index_of(&positions, &shape)? - 1;
            if !done[lin] {
                let last = q[k - 1];
                left.truncate(valid + 1);
                for s in valid + 1..=last {
                    let site = &sites[s - 1];
                    let next = match string_operator(s, &positions, ops, parity)? {
                        Some(op) => env_update(Direction::Left, &left[s - 1], Some(site), &apply_op(&op, site)?, &[])?,
                        None => env_update(Direction::Left, &left[s - 1], None, site, &[])?,
                    };
                    left.push(next);
                }
                valid = last;
                out.data_mut()[lin] = close(&left[last], &right[last])?;
                done[lin] = true;
            }
            let before = q.clone();
            if !next_operator_positions(&mut q, n) {
                break;
            }
            // environments strictly before the first changed slot's old site stay valid
            let changed = before.iter().zip(&q).position(|(a, b)| a != b).expect("tuple advanced");
            valid = valid.min(before[changed] - 1);
        }
    }
    Ok(out)
}

fn transfer_step<T: Scalar>(acc: Option<DenseTensor<T>>, a: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    match acc {
        // (l, σ, r) ⊗ conj(l', σ, r') -> (l, l', r, r')
        None => contract_with(&ContractionSpec::new(&[2], &[2]).conj(false, true).order(&[1, 3, 2, 4]), a, a),
        Some(e) => {
            // (l, l', r, r') · A(r, σ, s) -> (l, l', r', σ, s) · conj A(r', σ, s')
            let x = contract(&e, &[3], a, &[1])?;
            contract_with(&ContractionSpec::new(&[3, 4], &[1, 2]).conj(false, true), &x, a)
        }
    }
}

/// Product of site transfer maps `Σ_σ A^σ ⊗ conj(A^σ)` over sites `i..=j`,
/// with axes `(ket left, bra left, ket right, bra right)`. A `seed` (the
/// transfer tensor of sites ending at `i − 1`) is extended instead of
/// starting afresh.
pub fn transfer_matrix<T, S>(psi: &S, i: usize, j: usize, seed: Option<&DenseTensor<T>>) -> Result<DenseTensor<T>>
where
    T: Scalar,
    S: SiteChain<T> + ?Sized,
{
    let n = psi.len();
    if i == 0 || i > j || j > n {
        return Err(Error::Bounds(format!("transfer range {i}..={j} outside 1..={n}")));
    }
    let mut acc = seed.cloned();
    if let Some(s) = &acc {
        if s.rank() != 4 {
            return Err(shape_err("transfer seed must be rank 4"));
        }
    }
    for s in i..=j {
        acc = Some(transfer_step(acc, &*psi.site(s)?)?);
    }
    Ok(acc.expect("nonempty range"))
}

/// Transfer tensor grouped as a `(ket·bra left) × (ket·bra right)` matrix.
pub fn transfer_matrix_matrix<T: Scalar>(t: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    let (m, _) = t.reshape_grouped(&[vec![1, 2], vec![3, 4]])?;
    Ok(m)
}

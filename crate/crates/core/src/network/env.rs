use std::borrow::Cow;

use crate::contraction::{contract, contract_with, ContractionSpec};
use crate::decomposition::TruncationSpec;
use crate::error::{arg_err, shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

use super::{gauge_move, Direction, Env, SiteChain, StateChain};

/// Edge tensor for `p` operators: rank `p + 2`, every dimension 1, value 1.
///
/// MPO edge sites are already sliced to the start row and finish column of
/// the bulk operator matrix, so the boundary only has to close unit links.
pub fn make_boundary<T: Scalar>(p: usize) -> DenseTensor<T> {
    DenseTensor::ones(&vec![1; p + 2])
}

/// Left and right edge tensors for a bra/ket pair sandwiching the MPOs.
pub fn make_ends<T: Scalar, S, M>(dual: Option<&S>, psi: &S, mpos: &[&M]) -> Result<(DenseTensor<T>, DenseTensor<T>)>
where
    S: SiteChain<T> + ?Sized,
    M: SiteChain<T> + ?Sized,
{
    check_lengths(dual, psi, mpos)?;
    Ok((make_boundary(mpos.len()), make_boundary(mpos.len())))
}

fn check_lengths<T: Scalar, S, M>(dual: Option<&S>, psi: &S, mpos: &[&M]) -> Result<()>
where
    S: SiteChain<T> + ?Sized,
    M: SiteChain<T> + ?Sized,
{
    let n = psi.len();
    if dual.is_some_and(|d| d.len() != n) || mpos.iter().any(|m| m.len() != n) {
        return Err(shape_err("chains have different numbers of sites"));
    }
    Ok(())
}

/// Absorbs one site column into an environment tensor.
///
/// `env` has axes `(bra, w_1 … w_p, ket)`. The ket site is contracted first,
/// then the MPOs from `p` down to 1 (so `⟨ψ|W_1⋯W_p|ψ⟩` ordering), and the
/// conjugated bra site last. Without a dual the ket is its own bra.
pub fn env_update<T: Scalar>(
    direction: Direction,
    env: &DenseTensor<T>,
    dual: Option<&DenseTensor<T>>,
    psi: &DenseTensor<T>,
    mpos: &[&DenseTensor<T>],
) -> Result<DenseTensor<T>> {
    let p = mpos.len();
    if env.rank() != p + 2 {
        return Err(shape_err(format!(
            "environment of rank {} used with {p} operators",
            env.rank()
        )));
    }
    let bra = dual.unwrap_or(psi);
    // X axes after this step: (a, w_1 … w_p, s, b) with s the open physical
    // index and b the new ket link.
    let mut x = match direction {
        Direction::Left => contract(env, &[p + 2], psi, &[1])?,
        Direction::Right => {
            let mut order: Vec<usize> = (1..=p + 1).collect();
            order.extend([p + 3, p + 2]);
            contract_with(&ContractionSpec::new(&[p + 2], &[3]).order(&order), env, psi)?
        }
    };
    let (w_link, w_in) = match direction {
        Direction::Left => (1, 3),
        Direction::Right => (4, 3),
    };
    for k in (1..=p).rev() {
        // remaining: (a, w_<k, w_>k, b, W-rest...) then restore positions
        let rest = match direction {
            Direction::Left => [p + 2, p + 3],  // (out, w') -> out at p+2, w' at p+3
            Direction::Right => [p + 3, p + 2], // (w, out)
        };
        let mut order: Vec<usize> = vec![1];
        order.extend(2..=k);
        order.push(rest[1]);
        order.extend(k + 1..=p);
        order.extend([rest[0], p + 1]);
        let spec = ContractionSpec::new(&[1 + k, p + 2], &[w_link, w_in]).order(&order);
        x = contract_with(&spec, &x, mpos[k - 1])?;
    }
    let bra_axes = match direction {
        Direction::Left => [1, 2],
        Direction::Right => [3, 2],
    };
    let mut order = vec![p + 2];
    order.extend(1..=p + 1);
    let spec = ContractionSpec::new(&[1, p + 2], &bra_axes).conj(false, true).order(&order);
    contract_with(&spec, &x, bra)
}

/// Fills `lenv[1..=oc]` and `renv[oc..=Ns]` by repeated [`env_update`] from
/// the edges inward.
pub fn make_env_into<T, S, M, E>(
    dual: Option<&S>,
    psi: &S,
    mpos: &[&M],
    lenv: &mut E,
    renv: &mut E,
) -> Result<()>
where
    T: Scalar,
    S: StateChain<T> + ?Sized,
    M: SiteChain<T> + ?Sized,
    E: SiteChain<T> + ?Sized,
{
    check_lengths(dual, psi, mpos)?;
    let n = psi.len();
    let oc = psi.center();
    if oc == 0 {
        return Err(arg_err("environments need an orthogonality center"));
    }
    if lenv.len() != n || renv.len() != n {
        return Err(shape_err("environment length differs from the chain"));
    }
    let p = mpos.len();
    let mut cur = make_boundary::<T>(p);
    lenv.set_site(1, cur.clone())?;
    for i in 1..oc {
        cur = step(Direction::Left, &cur, dual, psi, mpos, i)?;
        lenv.set_site(i + 1, cur.clone())?;
    }
    let mut cur = make_boundary::<T>(p);
    renv.set_site(n, cur.clone())?;
    for i in (oc + 1..=n).rev() {
        cur = step(Direction::Right, &cur, dual, psi, mpos, i)?;
        renv.set_site(i - 1, cur.clone())?;
    }
    Ok(())
}

/// In-memory form of [`make_env_into`].
pub fn make_env<T, S, M>(dual: Option<&S>, psi: &S, mpos: &[&M]) -> Result<(Env<T>, Env<T>)>
where
    T: Scalar,
    S: StateChain<T> + ?Sized,
    M: SiteChain<T> + ?Sized,
{
    let mut l = Env::new(psi.len());
    let mut r = Env::new(psi.len());
    make_env_into(dual, psi, mpos, &mut l, &mut r)?;
    Ok((l, r))
}

fn step<T, S, M>(
    direction: Direction,
    env: &DenseTensor<T>,
    dual: Option<&S>,
    psi: &S,
    mpos: &[&M],
    site: usize,
) -> Result<DenseTensor<T>>
where
    T: Scalar,
    S: SiteChain<T> + ?Sized,
    M: SiteChain<T> + ?Sized,
{
    let ket = psi.site(site)?;
    let bra: Option<Cow<'_, DenseTensor<T>>> = dual.map(|d| d.site(site)).transpose()?;
    let ws: Vec<Cow<'_, DenseTensor<T>>> = mpos.iter().map(|m| m.site(site)).collect::<Result<_>>()?;
    let wrefs: Vec<&DenseTensor<T>> = ws.iter().map(|w| w.as_ref()).collect();
    env_update(direction, env, bra.as_deref(), &ket, &wrefs)
}

/// Moves the center to `target` and keeps the environments in step: every
/// right move adds `lenv[oc + 1]`, every left move adds `renv[oc − 1]`. The
/// state is its own dual. No consistency check is made on the incoming
/// environments. Returns the largest truncation error of the moves.
pub fn boundary_move<T, S, M, E>(
    psi: &mut S,
    target: usize,
    lenv: &mut E,
    renv: &mut E,
    mpos: &[&M],
    trunc: &TruncationSpec,
) -> Result<f64>
where
    T: Scalar,
    S: StateChain<T> + ?Sized,
    M: SiteChain<T> + ?Sized,
    E: SiteChain<T> + ?Sized,
{
    if target == 0 || target > psi.len() {
        return Err(crate::Error::Bounds(format!("target {target} outside 1..={}", psi.len())));
    }
    let mut worst = 0.0f64;
    while psi.center() < target {
        let oc = psi.center();
        worst = worst.max(gauge_move(psi, Direction::Right, trunc)?);
        let next = step(Direction::Left, &*lenv.site(oc)?, None, &*psi, mpos, oc)?;
        lenv.set_site(oc + 1, next)?;
    }
    while psi.center() > target {
        let oc = psi.center();
        worst = worst.max(gauge_move(psi, Direction::Left, trunc)?);
        let next = step(Direction::Right, &*renv.site(oc)?, None, &*psi, mpos, oc)?;
        renv.set_site(oc - 1, next)?;
    }
    Ok(worst)
}

/// `⟨dual|W_1⋯W_p|ψ⟩` by a single left-to-right transfer sweep. With no
/// MPOs this is the overlap; without a dual, ψ is used as its own bra.
pub fn expect<T, S, M>(dual: Option<&S>, psi: &S, mpos: &[&M]) -> Result<T>
where
    T: Scalar,
    S: SiteChain<T> + ?Sized,
    M: SiteChain<T> + ?Sized,
{
    check_lengths(dual, psi, mpos)?;
    let mut cur = make_boundary::<T>(mpos.len());
    for i in 1..=psi.len() {
        cur = step(Direction::Left, &cur, dual, psi, mpos, i)?;
    }
    cur.to_scalar()
}

/// `⟨a|b⟩`.
pub fn overlap<T, S>(a: &S, b: &S) -> Result<T>
where
    T: Scalar,
    S: SiteChain<T> + ?Sized,
{
    expect::<T, S, S>(Some(a), b, &[])
}

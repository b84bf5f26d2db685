use crate::contraction::contract;
use crate::decomposition::{lq_grouped, qr_grouped, scale_cols, scale_rows, svd_grouped, SvdOptions, TruncationSpec};
use crate::error::{arg_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

use super::{Direction, StateChain};

/// Moves the orthogonality center one site. QR (right) or LQ (left) is used
/// when the split cannot lose anything; otherwise a truncated SVD whose
/// singular values are absorbed into the receiving site. Returns the
/// truncation error of the split.
pub fn gauge_move<T: Scalar, S: StateChain<T> + ?Sized>(
    psi: &mut S,
    direction: Direction,
    trunc: &TruncationSpec,
) -> Result<f64> {
    let n = psi.len();
    let oc = psi.center();
    if oc == 0 {
        return Err(arg_err("the state has no orthogonality center"));
    }
    match direction {
        Direction::Right => {
            if oc >= n {
                return Err(Error::Bounds(format!("cannot move the center right of site {n}")));
            }
            let a = psi.site(oc)?.into_owned();
            let (l, s, r) = (a.dim(1), a.dim(2), a.dim(3));
            let (iso, rest, err) = if trunc.is_lossless_for(l * s, r) {
                let f = qr_grouped(&a, &[vec![1, 2], vec![3]])?;
                (f.left, f.right, 0.0)
            } else {
                let d = svd_grouped(&a, &[vec![1, 2], vec![3]], trunc, SvdOptions::default())?;
                let dv = d.dv();
                (d.u, dv, d.truncerr)
            };
            let next = contract(&rest, &[2], &*psi.site(oc + 1)?, &[1])?;
            psi.set_site(oc, iso)?;
            psi.set_site(oc + 1, next)?;
            psi.set_center(oc + 1)?;
            Ok(err)
        }
        Direction::Left => {
            if oc <= 1 {
                return Err(Error::Bounds("cannot move the center left of site 1".into()));
            }
            let a = psi.site(oc)?.into_owned();
            let (l, s, r) = (a.dim(1), a.dim(2), a.dim(3));
            let (rest, iso, err) = if trunc.is_lossless_for(l, s * r) {
                let f = lq_grouped(&a, &[vec![1], vec![2, 3]])?;
                (f.left, f.right, 0.0)
            } else {
                let d = svd_grouped(&a, &[vec![1], vec![2, 3]], trunc, SvdOptions::default())?;
                let ud = d.ud();
                (ud, d.v, d.truncerr)
            };
            let prev = contract(&*psi.site(oc - 1)?, &[3], &rest, &[1])?;
            psi.set_site(oc, iso)?;
            psi.set_site(oc - 1, prev)?;
            psi.set_center(oc - 1)?;
            Ok(err)
        }
    }
}

/// Repeated [`gauge_move`] until the center sits at `target`. Returns the
/// largest truncation error encountered.
pub fn move_center<T: Scalar, S: StateChain<T> + ?Sized>(
    psi: &mut S,
    target: usize,
    trunc: &TruncationSpec,
) -> Result<f64> {
    if target == 0 || target > psi.len() {
        return Err(Error::Bounds(format!("target {target} outside 1..={}", psi.len())));
    }
    if psi.center() == 0 {
        return Err(arg_err("the state has no orthogonality center"));
    }
    let mut worst = 0.0f64;
    while psi.center() < target {
        worst = worst.max(gauge_move(psi, Direction::Right, trunc)?);
    }
    while psi.center() > target {
        worst = worst.max(gauge_move(psi, Direction::Left, trunc)?);
    }
    Ok(worst)
}

/// Result of [`normalize_side`]: the singular values left over at the far
/// edge and the edge factor that goes with them.
#[derive(Clone, Debug)]
pub struct NormalizedSide<T: Scalar> {
    pub d: Vec<T::Real>,
    /// `V†` (shape `k × 1`) after a left normalization, `U` (shape `1 × k`)
    /// after a right normalization.
    pub edge: DenseTensor<T>,
}

/// Makes every site isometric toward one side by an SVD sweep, leaving the
/// state's weight in the returned `D` and edge factor. The center is reset
/// to 0.
///
/// Left normalization sweeps from site 1 to `Ns`; the state equals the
/// tensors contracted with `D·V†` on the last right link. Right
/// normalization mirrors this and returns `U·D` for the first left link.
pub fn normalize_side<T: Scalar, S: StateChain<T> + ?Sized>(
    psi: &mut S,
    side: Direction,
) -> Result<NormalizedSide<T>> {
    let n = psi.len();
    let spec = TruncationSpec::default();
    let out = match side {
        Direction::Left => {
            let mut carry: Option<DenseTensor<T>> = None;
            let mut last = None;
            for i in 1..=n {
                let mut a = psi.site(i)?.into_owned();
                if let Some(c) = carry.take() {
                    a = contract(&c, &[2], &a, &[1])?;
                }
                let d = svd_grouped(&a, &[vec![1, 2], vec![3]], &spec, SvdOptions::default())?;
                psi.set_site(i, d.u.clone())?;
                if i < n {
                    carry = Some(d.dv());
                } else {
                    last = Some(NormalizedSide { d: d.d.clone(), edge: d.v });
                }
            }
            last.expect("at least one site")
        }
        Direction::Right => {
            let mut carry: Option<DenseTensor<T>> = None;
            let mut first = None;
            for i in (1..=n).rev() {
                let mut a = psi.site(i)?.into_owned();
                if let Some(c) = carry.take() {
                    a = contract(&a, &[3], &c, &[1])?;
                }
                let d = svd_grouped(&a, &[vec![1], vec![2, 3]], &spec, SvdOptions::default())?;
                psi.set_site(i, d.v.clone())?;
                if i > 1 {
                    carry = Some(d.ud());
                } else {
                    first = Some(NormalizedSide { d: d.d.clone(), edge: d.u });
                }
            }
            first.expect("at least one site")
        }
    };
    psi.set_center(0)?;
    Ok(out)
}

/// `D·edge` (left form) or `edge·D` (right form) as one matrix.
impl<T: Scalar> NormalizedSide<T> {
    pub fn weight(&self, side: Direction) -> DenseTensor<T> {
        let mut e = self.edge.clone();
        match side {
            Direction::Left => scale_rows(&mut e, &self.d),
            Direction::Right => scale_cols(&mut e, &self.d),
        }
        e
    }
}

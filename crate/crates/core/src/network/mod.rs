//! Matrix product states, operators and environments.
//!
//! Site tensors of an MPS have axes `(left link, physical, right link)`; MPO
//! site tensors have `(left link, physical out, physical in, right link)`.
//! Environment tensors have `(bra link, one link per MPO, ket link)`. Sites
//! are numbered from 1.
//!
//! Algorithms are written against the [`SiteChain`] and [`StateChain`] traits
//! so that the same code runs on in-memory containers and on the disk-backed
//! ones in [`crate::storage`].

mod build;
mod env;
mod gauge;
mod measure;
mod mpo;

use std::borrow::Cow;

use crate::error::{arg_err, shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

pub use build::{full_h, full_psi, make_mps, product_mps, random_mps, ProductState, FULL_DIM_CAP};
pub use env::{
    boundary_move, env_update, expect, make_boundary, make_ends, make_env, make_env_into, overlap,
};
pub use gauge::{gauge_move, move_center, normalize_side, NormalizedSide};
pub use measure::{
    apply_mpo, apply_site_ops, apply_site_ops_in_place, correlation, correlation_matrix,
    heap_permutations, next_operator_positions, transfer_matrix, transfer_matrix_matrix,
};
pub use mpo::{make_mpo, make_mpo_flat, make_mpo_from_blocks, make_mpo_from_fn, penalty_mpo, OperatorMatrix};

/// Direction of a gauge move or environment update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

/// A chain of per-site tensors, indexed from 1.
pub trait SiteChain<T: Scalar> {
    fn len(&self) -> usize;

    /// Tensor at `site`; disk-backed chains read it on demand.
    fn site(&self, site: usize) -> Result<Cow<'_, DenseTensor<T>>>;

    fn set_site(&mut self, site: usize, tensor: DenseTensor<T>) -> Result<()>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A state chain that tracks its orthogonality center (0 means ungauged).
pub trait StateChain<T: Scalar>: SiteChain<T> {
    fn center(&self) -> usize;
    fn set_center(&mut self, oc: usize) -> Result<()>;
}

pub(crate) fn check_site(site: usize, len: usize) -> Result<()> {
    if site == 0 || site > len {
        return Err(Error::Bounds(format!("site {site} outside 1..={len}")));
    }
    Ok(())
}

/// Matrix product state.
#[derive(Clone, Debug)]
pub struct MPS<T: Scalar> {
    tensors: Vec<DenseTensor<T>>,
    oc: usize,
}

/// Matrix product operator. There is no gauge condition on an MPO.
#[derive(Clone, Debug)]
pub struct MPO<T: Scalar> {
    tensors: Vec<DenseTensor<T>>,
}

/// One side of an environment: position `i` holds the contraction of
/// everything strictly left (or right) of site `i`. Unfilled positions are
/// `None`.
#[derive(Clone, Debug)]
pub struct Env<T: Scalar> {
    tensors: Vec<Option<DenseTensor<T>>>,
}

fn promote_state_edges<T: Scalar>(mut tensors: Vec<DenseTensor<T>>) -> Result<Vec<DenseTensor<T>>> {
    let n = tensors.len();
    for (k, t) in tensors.iter_mut().enumerate() {
        let shape = t.shape().to_vec();
        let promoted = match (shape.len(), n, k) {
            (3, _, _) => continue,
            (1, 1, _) => vec![1, shape[0], 1],
            (2, _, 0) if n > 1 => vec![1, shape[0], shape[1]],
            (2, _, k) if k == n - 1 && n > 1 => vec![shape[0], shape[1], 1],
            _ => {
                return Err(shape_err(format!(
                    "site {} has shape {shape:?}; expected rank 3 (rank 2 only at the chain ends)",
                    k + 1
                )))
            }
        };
        t.reshape_in_place(&promoted)?;
    }
    Ok(tensors)
}

fn check_links<T: Scalar>(tensors: &[DenseTensor<T>], rank: usize) -> Result<()> {
    if tensors.is_empty() {
        return Err(arg_err("a chain needs at least one site"));
    }
    for (k, t) in tensors.iter().enumerate() {
        if t.rank() != rank {
            return Err(shape_err(format!(
                "site {} has rank {}, expected {rank}",
                k + 1,
                t.rank()
            )));
        }
    }
    if tensors[0].dim(1) != 1 || tensors[tensors.len() - 1].dim(rank) != 1 {
        return Err(shape_err("edge link dimensions must be 1"));
    }
    for k in 1..tensors.len() {
        let (l, r) = (tensors[k - 1].dim(rank), tensors[k].dim(1));
        if l != r {
            return Err(shape_err(format!(
                "link between sites {k} and {} has dimensions {l} and {r}",
                k + 1
            )));
        }
    }
    Ok(())
}

impl<T: Scalar> MPS<T> {
    /// Builds an MPS from site tensors. Rank-2 tensors at the ends (and a
    /// rank-1 tensor for a single site) are promoted to rank 3 with unit
    /// links. `oc` defaults to 1.
    pub fn new(tensors: Vec<DenseTensor<T>>, oc: Option<usize>) -> Result<Self> {
        let tensors = promote_state_edges(tensors)?;
        check_links(&tensors, 3)?;
        let oc = oc.unwrap_or(1);
        if oc > tensors.len() {
            return Err(Error::Bounds(format!(
                "orthogonality center {oc} outside 0..={}",
                tensors.len()
            )));
        }
        Ok(MPS { tensors, oc })
    }

    pub fn tensors(&self) -> &[DenseTensor<T>] {
        &self.tensors
    }

    pub fn into_tensors(self) -> Vec<DenseTensor<T>> {
        self.tensors
    }

    /// Site tensor at 1-based `site`. Panics when out of range.
    pub fn tensor(&self, site: usize) -> &DenseTensor<T> {
        &self.tensors[site - 1]
    }

    pub fn oc(&self) -> usize {
        self.oc
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.dim(2)).collect()
    }

    /// Link dimensions between neighbouring sites (length `Ns − 1`).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.dim(3)).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Same state with every element converted to another scalar type.
    pub fn cast<U: Scalar>(&self) -> MPS<U> {
        MPS {
            tensors: self.tensors.iter().map(DenseTensor::cast).collect(),
            oc: self.oc,
        }
    }

    /// `sqrt(⟨ψ|ψ⟩)`, computed without assuming any gauge.
    pub fn norm(&self) -> Result<f64> {
        Ok(overlap(self, self)?.re_f64().max(0.0).sqrt())
    }
}

impl<T: Scalar> MPO<T> {
    pub fn new(tensors: Vec<DenseTensor<T>>) -> Result<Self> {
        check_links(&tensors, 4)?;
        for (k, t) in tensors.iter().enumerate() {
            if t.dim(2) != t.dim(3) {
                return Err(shape_err(format!(
                    "MPO site {} maps dimension {} to {}",
                    k + 1,
                    t.dim(3),
                    t.dim(2)
                )));
            }
        }
        Ok(MPO { tensors })
    }

    pub fn tensors(&self) -> &[DenseTensor<T>] {
        &self.tensors
    }

    pub fn tensor(&self, site: usize) -> &DenseTensor<T> {
        &self.tensors[site - 1]
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.dim(2)).collect()
    }

    pub fn cast<U: Scalar>(&self) -> MPO<U> {
        MPO {
            tensors: self.tensors.iter().map(DenseTensor::cast).collect(),
        }
    }
}

impl<T: Scalar> Env<T> {
    /// Empty environment with `len` unfilled positions.
    pub fn new(len: usize) -> Self {
        Env {
            tensors: vec![None; len],
        }
    }

    pub fn get(&self, site: usize) -> Option<&DenseTensor<T>> {
        self.tensors.get(site.wrapping_sub(1)).and_then(Option::as_ref)
    }

    pub fn is_filled(&self, site: usize) -> bool {
        self.get(site).is_some()
    }
}

impl<T: Scalar> SiteChain<T> for MPS<T> {
    fn len(&self) -> usize {
        self.tensors.len()
    }

    fn site(&self, site: usize) -> Result<Cow<'_, DenseTensor<T>>> {
        check_site(site, self.tensors.len())?;
        Ok(Cow::Borrowed(&self.tensors[site - 1]))
    }

    fn set_site(&mut self, site: usize, tensor: DenseTensor<T>) -> Result<()> {
        check_site(site, self.tensors.len())?;
        if tensor.rank() != 3 {
            return Err(shape_err(format!("MPS site tensor of shape {:?}", tensor.shape())));
        }
        self.tensors[site - 1] = tensor;
        Ok(())
    }
}

impl<T: Scalar> StateChain<T> for MPS<T> {
    fn center(&self) -> usize {
        self.oc
    }

    fn set_center(&mut self, oc: usize) -> Result<()> {
        if oc > self.tensors.len() {
            return Err(Error::Bounds(format!("center {oc} outside 0..={}", self.tensors.len())));
        }
        self.oc = oc;
        Ok(())
    }
}

impl<T: Scalar> SiteChain<T> for MPO<T> {
    fn len(&self) -> usize {
        self.tensors.len()
    }

    fn site(&self, site: usize) -> Result<Cow<'_, DenseTensor<T>>> {
        check_site(site, self.tensors.len())?;
        Ok(Cow::Borrowed(&self.tensors[site - 1]))
    }

    fn set_site(&mut self, site: usize, tensor: DenseTensor<T>) -> Result<()> {
        check_site(site, self.tensors.len())?;
        if tensor.rank() != 4 {
            return Err(shape_err(format!("MPO site tensor of shape {:?}", tensor.shape())));
        }
        self.tensors[site - 1] = tensor;
        Ok(())
    }
}

impl<T: Scalar> SiteChain<T> for Env<T> {
    fn len(&self) -> usize {
        self.tensors.len()
    }

    fn site(&self, site: usize) -> Result<Cow<'_, DenseTensor<T>>> {
        check_site(site, self.tensors.len())?;
        self.tensors[site - 1]
            .as_ref()
            .map(Cow::Borrowed)
            .ok_or_else(|| arg_err(format!("environment at site {site} has not been computed")))
    }

    fn set_site(&mut self, site: usize, tensor: DenseTensor<T>) -> Result<()> {
        check_site(site, self.tensors.len())?;
        self.tensors[site - 1] = Some(tensor);
        Ok(())
    }
}

/// Site tensors of a chain in order (reads every site of a disk chain).
pub fn collect_sites<T: Scalar, C: SiteChain<T> + ?Sized>(chain: &C) -> Result<Vec<DenseTensor<T>>> {
    (1..=chain.len()).map(|i| chain.site(i).map(Cow::into_owned)).collect()
}

/// Physical dimension of every site, taken from axis 2.
pub fn chain_phys_dims<T: Scalar, C: SiteChain<T> + ?Sized>(chain: &C) -> Result<Vec<usize>> {
    (1..=chain.len()).map(|i| chain.site(i).map(|t| t.dim(2))).collect()
}


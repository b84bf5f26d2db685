//! Lattice Hamiltonians as lower-triangular MPOs.
//!
//! Every builder fills an operator matrix with `W[0][0] = Id`, the last
//! diagonal entry `Id`, channel openers in the last row and channel closers
//! in the first column. Fermionic hopping carries Jordan–Wigner parity on the
//! left site of each bond.

use crate::error::Result;
use crate::network::{make_mpo, OperatorMatrix, MPO};
use crate::operators::{fermion_ops, spin_ops, tj_ops, SiteOperatorSet};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

/// Nearest-neighbour term `coeff · A_i B_{i+1}`.
struct Channel<T: Scalar> {
    open: DenseTensor<T>,
    close: DenseTensor<T>,
}

fn assemble<T: Scalar>(ops: &SiteOperatorSet<T>, onsite: DenseTensor<T>, channels: Vec<Channel<T>>) -> OperatorMatrix<T> {
    let k = channels.len() + 2;
    let last = k - 1;
    let mut w = vec![vec![ops.zero().clone(); k]; k];
    w[0][0] = ops.id().clone();
    w[last][last] = ops.id().clone();
    w[last][0] = onsite;
    for (c, ch) in channels.into_iter().enumerate() {
        w[last][c + 1] = ch.open;
        w[c + 1][0] = ch.close;
    }
    w
}

fn mul<T: Scalar>(a: &DenseTensor<T>, b: &DenseTensor<T>) -> DenseTensor<T> {
    a.matmul(b).expect("square operators of one dimension")
}

/// Operator matrix of the spin-`s` XXZ chain
/// `Σ J/2 (S⁺S⁻ + S⁻S⁺) + Jz S^z S^z`.
pub fn xxz_blocks<T: Scalar>(s: f64, j: f64, jz: f64) -> Result<OperatorMatrix<T>> {
    let ops = spin_ops::<T>(s)?;
    let g = |n: &str| ops.get(n).cloned();
    let (sp, sm, sz) = (g("Sp")?, g("Sm")?, g("Sz")?);
    let channels = vec![
        Channel { open: &sp * T::of(j / 2.0), close: sm.clone() },
        Channel { open: &sm * T::of(j / 2.0), close: sp },
        Channel { open: &sz * T::of(jz), close: sz },
    ];
    Ok(assemble(&ops, ops.zero().clone(), channels))
}

pub fn xxz_mpo<T: Scalar>(ns: usize, s: f64, j: f64, jz: f64) -> Result<MPO<T>> {
    make_mpo(&xxz_blocks(s, j, jz)?, ns, true)
}

/// Isotropic Heisenberg chain `J Σ S_i·S_{i+1}`.
pub fn heisenberg_mpo<T: Scalar>(ns: usize, s: f64, j: f64) -> Result<MPO<T>> {
    xxz_mpo(ns, s, j, j)
}

/// `Σ_i S^z_i`.
pub fn sz_sum_mpo<T: Scalar>(ns: usize, s: f64) -> Result<MPO<T>> {
    let ops = spin_ops::<T>(s)?;
    let w = assemble(&ops, ops.get("Sz")?.clone(), vec![]);
    make_mpo(&w, ns, true)
}

fn hopping<T: Scalar>(ops: &SiteOperatorSet<T>, t: f64) -> Result<Vec<Channel<T>>> {
    let f = ops.get("F")?;
    let mut out = Vec::new();
    for name in ["Cup", "Cdn"] {
        let c = ops.get(name)?;
        let cd = c.adjoint()?;
        // c†_i c_{i+1} = (c†F)_i c_{i+1};  c†_{i+1} c_i = (F c)_i c†_{i+1}
        out.push(Channel { open: &mul(&cd, f) * T::of(-t), close: c.clone() });
        out.push(Channel { open: &mul(f, c) * T::of(-t), close: cd });
    }
    Ok(out)
}

/// Hubbard chain `−t Σ_σ (c†_{iσ} c_{i+1σ} + h.c.) + U Σ n↑n↓ − μ Σ n`.
pub fn hubbard_mpo<T: Scalar>(ns: usize, t: f64, u: f64, mu: f64) -> Result<MPO<T>> {
    let ops = fermion_ops::<T>();
    let onsite = &(&mul(ops.get("Nup")?, ops.get("Ndn")?) * T::of(u)) - &(ops.get("Ndens")? * T::of(mu));
    let w = assemble(&ops, onsite, hopping(&ops, t)?);
    make_mpo(&w, ns, true)
}

/// t-J chain `−t Σ_σ (c†c + h.c.) + J Σ (S_i·S_{i+1} − n_i n_{i+1}/4) − μ Σ n`
/// on the space without double occupancy.
pub fn tj_mpo<T: Scalar>(ns: usize, t: f64, j: f64, mu: f64) -> Result<MPO<T>> {
    let ops = tj_ops::<T>();
    let g = |n: &str| ops.get(n).cloned();
    let (sp, sm, sz, n) = (g("Sp")?, g("Sm")?, g("Sz")?, g("Ndens")?);
    let mut channels = hopping(&ops, t)?;
    channels.push(Channel { open: &sp * T::of(j / 2.0), close: sm.clone() });
    channels.push(Channel { open: &sm * T::of(j / 2.0), close: sp });
    channels.push(Channel { open: &sz * T::of(j), close: sz });
    channels.push(Channel { open: &n * T::of(-j / 4.0), close: n.clone() });
    let onsite = &n * T::of(-mu);
    make_mpo(&assemble(&ops, onsite, channels), ns, true)
}

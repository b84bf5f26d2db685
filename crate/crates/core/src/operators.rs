//! On-site operator sets for spin, Hubbard and t-J lattices.

use std::collections::BTreeMap;

use crate::error::{arg_err, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

/// Named square operators sharing one physical dimension. `Id` and `O`
/// (the zero matrix) are always present.
#[derive(Clone, Debug)]
pub struct SiteOperatorSet<T: Scalar> {
    dim: usize,
    ops: BTreeMap<String, DenseTensor<T>>,
}

impl<T: Scalar> SiteOperatorSet<T> {
    fn with_dim(dim: usize) -> Self {
        let mut ops = BTreeMap::new();
        ops.insert("Id".to_string(), DenseTensor::from_fn(&[dim, dim], |p| {
            if p[0] == p[1] { T::one() } else { T::zero() }
        }));
        ops.insert("O".to_string(), DenseTensor::zeros(&[dim, dim]));
        SiteOperatorSet { dim, ops }
    }

    /// Adds or replaces an operator; its shape must be `dim × dim`.
    pub fn insert(&mut self, name: &str, op: DenseTensor<T>) -> Result<()> {
        if op.shape() != [self.dim, self.dim] {
            return Err(arg_err(format!(
                "operator {name} has shape {:?}, expected [{d}, {d}]",
                op.shape(),
                d = self.dim
            )));
        }
        self.ops.insert(name.to_string(), op);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, name: &str) -> Result<&DenseTensor<T>> {
        self.ops.get(name).ok_or_else(|| {
            arg_err(format!(
                "unknown operator {name:?}; available: {}",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.ops.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.ops.keys().map(String::as_str)
    }

    pub fn id(&self) -> &DenseTensor<T> {
        &self.ops["Id"]
    }

    pub fn zero(&self) -> &DenseTensor<T> {
        &self.ops["O"]
    }

    /// Leading `n × n` block of every operator.
    fn restricted(&self, n: usize) -> Self {
        let mut out = Self::with_dim(n);
        for (name, op) in &self.ops {
            let block = DenseTensor::from_fn(&[n, n], |p| op.data()[(p[0] - 1) + (p[1] - 1) * self.dim]);
            out.ops.insert(name.clone(), block);
        }
        out
    }
}

/// Spin-`s` operators `{Sx, Sy, Sz, Sp, Sm, O, Id}` in the basis
/// `m = s, s−1, …, −s`. `Sy` is only present for complex scalars.
pub fn spin_ops<T: Scalar>(s: f64) -> Result<SiteOperatorSet<T>> {
    let two_s = 2.0 * s;
    if !(s > 0.0) || (two_s - two_s.round()).abs() > 1e-12 {
        return Err(arg_err(format!("spin must be a positive multiple of 1/2, got {s}")));
    }
    let d = two_s.round() as usize + 1;
    let mut set = SiteOperatorSet::with_dim(d);
    // basis index a (0-based) carries m = s − a
    let m_of = |a: usize| s - a as f64;
    let sz = DenseTensor::from_fn(&[d, d], |p| {
        if p[0] == p[1] { T::of(m_of(p[0] - 1)) } else { T::zero() }
    });
    let sp = DenseTensor::from_fn(&[d, d], |p| {
        let (r, c) = (p[0] - 1, p[1] - 1);
        if r + 1 == c {
            let m = m_of(c);
            T::of((s * (s + 1.0) - m * (m + 1.0)).sqrt())
        } else {
            T::zero()
        }
    });
    let sm = sp.adjoint()?;
    let half = T::of(0.5);
    let sx = &(&sp + &sm) * half;
    set.insert("Sz", sz)?;
    set.insert("Sx", sx)?;
    if T::IS_COMPLEX {
        // (Sp − Sm) / 2i = −i/2 (Sp − Sm)
        let sy = &(&sp - &sm) * T::from_parts(0.0, -0.5);
        set.insert("Sy", sy)?;
    }
    set.insert("Sp", sp)?;
    set.insert("Sm", sm)?;
    Ok(set)
}

/// Hubbard operators over the basis `(|0⟩, |↑⟩, |↓⟩, |↑↓⟩)` with
/// `|↑↓⟩ = c†↑ c†↓ |0⟩`.
pub fn fermion_ops<T: Scalar>() -> SiteOperatorSet<T> {
    let mut set = SiteOperatorSet::with_dim(4);
    let entry = |entries: &[(usize, usize, f64)]| {
        let mut t = DenseTensor::zeros(&[4, 4]);
        for &(r, c, v) in entries {
            t.data_mut()[r + 4 * c] = T::of(v);
        }
        t
    };
    let cup = entry(&[(0, 1, 1.0), (2, 3, 1.0)]);
    let cdn = entry(&[(0, 2, 1.0), (1, 3, -1.0)]);
    let f = entry(&[(0, 0, 1.0), (1, 1, -1.0), (2, 2, -1.0), (3, 3, 1.0)]);
    let nup = entry(&[(1, 1, 1.0), (3, 3, 1.0)]);
    let ndn = entry(&[(2, 2, 1.0), (3, 3, 1.0)]);
    let ndens = &nup + &ndn;
    for (name, op) in [("Cup", cup), ("Cdn", cdn), ("F", f), ("Nup", nup), ("Ndn", ndn), ("Ndens", ndens)] {
        set.insert(name, op).expect("4×4 by construction");
    }
    set
}

/// t-J operators: the Hubbard set restricted to `(|0⟩, |↑⟩, |↓⟩)` plus spin
/// operators from `S = c†_σ (σ⃗/2)_{σσ'} c_σ'`.
pub fn tj_ops<T: Scalar>() -> SiteOperatorSet<T> {
    let mut set = fermion_ops::<T>().restricted(3);
    let get = |n: &str| set.get(n).expect("present").clone();
    let (cup, cdn, nup, ndn) = (get("Cup"), get("Cdn"), get("Nup"), get("Ndn"));
    let sp = cup.adjoint().and_then(|c| c.matmul(&cdn)).expect("3×3");
    let sm = sp.adjoint().expect("3×3");
    let sz = &(&nup - &ndn) * T::of(0.5);
    set.insert("Sz", sz).expect("3×3");
    set.insert("Sp", sp).expect("3×3");
    set.insert("Sm", sm).expect("3×3");
    set
}

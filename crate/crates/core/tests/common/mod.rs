//! Dense reference constructions shared by the integration tests. Nothing
//! here goes through the MPS machinery.
#![allow(dead_code)]

use mpskit::network::{make_mps, random_mps};
use mpskit::{decomposition::TruncationSpec, Complex64, DenseTensor, Scalar, MPS};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Spin-½ matrices from the Pauli matrices, basis (↑, ↓).
pub fn pauli_spin() -> [DMatrix<C>; 3] {
    let sx = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0.5, 0.), c(0.5, 0.), c(0., 0.)]);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -0.5), c(0., 0.5), c(0., 0.)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.)]);
    [sx, sy, sz]
}

/// Operator on the full space acting with `ops[s]` on site `s` (identity
/// where `None`), site 1 fastest.
pub fn embed(ops: &[Option<&DMatrix<C>>], d: usize) -> DMatrix<C> {
    let n = ops.len();
    let dim = d.pow(n as u32);
    DMatrix::from_fn(dim, dim, |x, y| {
        let (mut xr, mut yr) = (x, y);
        let mut v = c(1.0, 0.0);
        for op in ops {
            let (a, b) = (xr % d, yr % d);
            xr /= d;
            yr /= d;
            v *= match op {
                Some(m) => m[(a, b)],
                None => {
                    if a == b {
                        c(1.0, 0.0)
                    } else {
                        c(0.0, 0.0)
                    }
                }
            };
            if v == c(0.0, 0.0) {
                break;
            }
        }
        v
    })
}

pub fn single(op: &DMatrix<C>, site: usize, n: usize, d: usize) -> DMatrix<C> {
    let mut ops: Vec<Option<&DMatrix<C>>> = vec![None; n];
    ops[site - 1] = Some(op);
    embed(&ops, d)
}

/// Open spin-½ XXZ chain `Σ J (Sx Sx + Sy Sy) + Jz Sz Sz`.
pub fn xxz_dense(n: usize, j: f64, jz: f64) -> DMatrix<C> {
    let s = pauli_spin();
    let dim = 1 << n;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 1..n {
        for (k, coeff) in [(0, j), (1, j), (2, jz)] {
            let mut ops: Vec<Option<&DMatrix<C>>> = vec![None; n];
            ops[i - 1] = Some(&s[k]);
            ops[i] = Some(&s[k]);
            h += embed(&ops, 2) * c(coeff, 0.0);
        }
    }
    h
}

pub fn eigenvalues(h: &DMatrix<C>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn to_c<T: Scalar>(t: &DenseTensor<T>) -> DMatrix<C> {
    let m = if t.rank() == 1 {
        DenseTensor::from_vec(vec![t.len(), 1], t.data().to_vec()).unwrap()
    } else {
        t.clone()
    };
    DMatrix::from_fn(m.dim(1), m.dim(2), |r, col| {
        let x = m.data()[r + col * m.dim(1)];
        c(x.re_f64(), x.im_f64())
    })
}

/// Dense vector from an MPS by brute-force summation over every basis
/// configuration, independent of any library contraction.
pub fn brute_force_psi<T: Scalar>(psi: &MPS<T>) -> Vec<C> {
    let dims = psi.phys_dims();
    let total: usize = dims.iter().product();
    (0..total)
        .map(|x| {
            let mut row: Vec<C> = vec![c(1.0, 0.0)];
            let mut rem = x;
            for (s, &d) in dims.iter().enumerate() {
                let sigma = rem % d;
                rem /= d;
                let a = psi.tensor(s + 1);
                let (l, r) = (a.dim(1), a.dim(3));
                let mut next = vec![c(0.0, 0.0); r];
                for (k, n) in next.iter_mut().enumerate() {
                    for (j, &rv) in row.iter().enumerate().take(l) {
                        let e = a.data()[j + l * (sigma + d * k)];
                        *n += rv * c(e.re_f64(), e.im_f64());
                    }
                }
                row = next;
            }
            row[0]
        })
        .collect()
}

pub fn rand_mps_c(n: usize, d: usize, bond: usize, seed: u64) -> MPS<C> {
    random_mps(&[d], n, bond, &mut rng(seed)).unwrap()
}

pub fn rand_mps_r(n: usize, d: usize, bond: usize, seed: u64) -> MPS<f64> {
    random_mps(&[d], n, bond, &mut rng(seed)).unwrap()
}

pub fn mps_of(v: &[f64], d: usize, n: usize) -> MPS<f64> {
    make_mps(v, &[d], n, &TruncationSpec::default()).unwrap()
}

pub fn vdiff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Hubbard on-site matrices in the basis (|0⟩, |↑⟩, |↓⟩, |↑↓⟩) with
/// |↑↓⟩ = c†↑ c†↓ |0⟩, built from occupation-number rules.
pub fn hubbard_site() -> (DMatrix<C>, DMatrix<C>, DMatrix<C>) {
    // occupations (up, dn) of each basis state
    let occ = [(0, 0), (1, 0), (0, 1), (1, 1)];
    let idx = |u: i32, dn: i32| occ.iter().position(|&o| o == (u, dn)).unwrap();
    let mut up = DMatrix::zeros(4, 4);
    let mut dn = DMatrix::zeros(4, 4);
    for (k, &(u, d)) in occ.iter().enumerate() {
        if u == 1 {
            // c↑ acts first in the ordering c†↑ c†↓, no sign
            up[(idx(0, d), k)] = c(1.0, 0.0);
        }
        if d == 1 {
            // c↓ passes c†↑ when the up orbital is filled
            let sign = if u == 1 { -1.0 } else { 1.0 };
            dn[(idx(u, 0), k)] = c(sign, 0.0);
        }
    }
    let parity = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1., 0.), c(-1., 0.), c(-1., 0.), c(1., 0.)]));
    (up, dn, parity)
}

/// Full-space fermion annihilator with a Jordan–Wigner string on the sites
/// before `site`.
pub fn jw_annihilator(local: &DMatrix<C>, parity: &DMatrix<C>, site: usize, n: usize) -> DMatrix<C> {
    let mut ops: Vec<Option<&DMatrix<C>>> = vec![None; n];
    for o in ops.iter_mut().take(site - 1) {
        *o = Some(parity);
    }
    ops[site - 1] = Some(local);
    embed(&ops, 4)
}

//! Two-site DMRG ground-state search.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::contraction::contract;
use crate::decomposition::{svd_grouped, SvdOptions, TruncationSpec};
use crate::error::{arg_err, shape_err, Error, Result};
use crate::network::{env_update, make_env_into, move_center, Direction, Env, SiteChain, StateChain};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

/// Applies the two-site effective Hamiltonian to `theta` with axes
/// `(left link, σᵢ, σᵢ₊₁, right link)`. `lenv` is the left environment of
/// site `i` and `renv` the right environment of site `i + 1`, both with axes
/// `(bra, mpo, ket)`.
pub fn effective_h_apply<T: Scalar>(
    lenv: &DenseTensor<T>,
    w1: &DenseTensor<T>,
    w2: &DenseTensor<T>,
    renv: &DenseTensor<T>,
    theta: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    if theta.rank() != 4 || lenv.rank() != 3 || renv.rank() != 3 || w1.rank() != 4 || w2.rank() != 4 {
        return Err(shape_err("effective Hamiltonian needs rank-3 environments, rank-4 MPO tensors and a rank-4 theta"));
    }
    // (bra, w, ket)·θ(l, s1, s2, r) -> (bra, w, s1, s2, r)
    let x = contract(lenv, &[3], theta, &[1])?;
    // W1(a, o1, i1, b) -> (bra, s2, r, o1, b)
    let x = contract(&x, &[2, 3], w1, &[1, 3])?;
    // W2(b, o2, i2, c) -> (bra, r, o1, o2, c)
    let x = contract(&x, &[5, 2], w2, &[1, 3])?;
    // R(bra', c, ket') -> (bra, o1, o2, bra')
    contract(&x, &[2, 5], renv, &[3, 2])
}

/// Settings of the Lanczos ground-state solver.
#[derive(Clone, Debug, PartialEq)]
pub struct LanczosOptions {
    pub max_iter: usize,
    /// Residual tolerance relative to the largest Ritz value magnitude
    /// (at least 1).
    pub tol: f64,
    /// Seed for the perturbation used when the Krylov space closes early.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { max_iter: 100, tol: 1e-10, seed: 0 }
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.conjugate() * *y)
}

fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.abs_f64().powi(2)).sum::<f64>().sqrt()
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

fn scale<T: Scalar>(a: &mut [T], s: f64) {
    for x in a {
        *x *= T::of(s);
    }
}

struct Krylov {
    value: f64,
    coeffs: Vec<f64>,
    converged: bool,
    closed: bool,
}

fn lanczos_run<T, F>(apply: &mut F, start: Vec<T>, shape: &[usize], opts: &LanczosOptions) -> Result<(Krylov, Vec<Vec<T>>)>
where
    T: Scalar,
    F: FnMut(&DenseTensor<T>) -> Result<DenseTensor<T>>,
{
    let n = start.len();
    let mut basis: Vec<Vec<T>> = vec![start];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let limit = opts.max_iter.max(1).min(n);
    loop {
        let k = basis.len();
        let q = DenseTensor::from_vec(shape.to_vec(), basis[k - 1].clone())?;
        let hq = apply(&q)?;
        if hq.shape() != shape {
            return Err(shape_err(format!("operator maps shape {shape:?} to {:?}", hq.shape())));
        }
        let mut w = hq.data().to_vec();
        alpha.push(dot(&basis[k - 1], &w).re_f64());
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(-c, b, &mut w);
            }
        }
        let b = norm(&w);
        let m = alpha.len();
        let tri = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(tri);
        let (imin, &value) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let coeffs: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
        let scale_est = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let residual = b * coeffs[m - 1].abs();
        let converged = residual <= opts.tol * scale_est;
        let closed = b <= 1e-13 * scale_est;
        if converged || closed || m >= limit {
            return Ok((Krylov { value, coeffs, converged: converged || closed, closed: closed && m < n }, basis));
        }
        beta.push(b);
        scale(&mut w, 1.0 / b);
        basis.push(w);
    }
}

fn ritz<T: Scalar>(basis: &[Vec<T>], coeffs: &[f64]) -> Vec<T> {
    let mut v = vec![T::zero(); basis[0].len()];
    for (b, &c) in basis.iter().zip(coeffs) {
        axpy(T::of(c), b, &mut v);
    }
    let n = norm(&v);
    scale(&mut v, 1.0 / n);
    v
}

/// Lowest eigenpair of a Hermitian linear map by Lanczos iteration with full
/// reorthogonalization. If the Krylov space closes before the whole space
/// is explored, the search restarts once from the Ritz vector plus a small
/// seeded perturbation and the lower result is kept.
pub fn lanczos_ground<T, F>(mut apply: F, guess: &DenseTensor<T>, opts: &LanczosOptions) -> Result<(f64, DenseTensor<T>)>
where
    T: Scalar,
    F: FnMut(&DenseTensor<T>) -> Result<DenseTensor<T>>,
{
    let nrm = norm(guess.data());
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(arg_err("Lanczos needs a nonzero finite starting vector"));
    }
    let shape = guess.shape().to_vec();
    let mut start = guess.data().to_vec();
    scale(&mut start, 1.0 / nrm);
    let (first, basis) = lanczos_run(&mut apply, start, &shape, opts)?;
    let mut best = (first.value, ritz(&basis, &first.coeffs));
    if first.closed {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let noise = DenseTensor::<T>::random(&shape, &mut rng);
        let mut v = best.1.clone();
        let nn = norm(noise.data());
        axpy(T::of(1e-2 / nn), noise.data(), &mut v);
        let nv = norm(&v);
        scale(&mut v, 1.0 / nv);
        let (second, basis) = lanczos_run(&mut apply, v, &shape, opts)?;
        if second.value < best.0 {
            best = (second.value, ritz(&basis, &second.coeffs));
        }
    } else if !first.converged && opts.max_iter < guess.len() {
        // one restart from the current Ritz vector before giving up
        let (second, basis) = lanczos_run(&mut apply, best.1.clone(), &shape, opts)?;
        if second.value <= best.0 {
            best = (second.value, ritz(&basis, &second.coeffs));
        }
    }
    Ok((best.0, DenseTensor::from_vec(shape, best.1)?))
}

/// DMRG variant. Only the two-site update is available.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DmrgMethod {
    TwoSite,
}

impl FromStr for DmrgMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "twosite" => Ok(DmrgMethod::TwoSite),
            "3S" => Err(arg_err(
                "method \"3S\" (strictly single-site DMRG) is not supported; use \"twosite\"",
            )),
            other => Err(arg_err(format!("unknown DMRG method \"{other}\"; expected \"twosite\""))),
        }
    }
}

impl fmt::Display for DmrgMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("twosite")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DmrgOptions {
    pub sweeps: usize,
    pub method: DmrgMethod,
    pub trunc: TruncationSpec,
    /// Energy change below which a sweep counts as converged.
    pub convergence: f64,
    /// Stop after two consecutive converged sweeps.
    pub early_stop: bool,
    pub lanczos: LanczosOptions,
}

impl Default for DmrgOptions {
    fn default() -> Self {
        DmrgOptions {
            sweeps: 20,
            method: DmrgMethod::TwoSite,
            trunc: TruncationSpec::default().with_minm(2),
            convergence: 1e-10,
            early_stop: true,
            lanczos: LanczosOptions::default(),
        }
    }
}

impl DmrgOptions {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(arg_err("at least one sweep is required"));
        }
        if !(self.convergence > 0.0) || !(self.lanczos.tol > 0.0) {
            return Err(arg_err("convergence thresholds must be positive"));
        }
        if self.lanczos.max_iter == 0 {
            return Err(arg_err("the local solver needs at least one iteration"));
        }
        self.trunc.validate()
    }
}

/// Summary of one full (right then left) sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub sweep: usize,
    pub energy: f64,
    pub max_bond_dim: usize,
    pub max_truncerr: f64,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    pub reports: Vec<SweepReport>,
    pub energy: f64,
}

/// Two-site DMRG with in-memory environments.
pub fn dmrg<T, S, M>(psi: &mut S, mpo: &M, opts: &DmrgOptions) -> Result<DmrgResult>
where
    T: Scalar,
    S: StateChain<T> + ?Sized,
    M: SiteChain<T> + ?Sized,
{
    let mut lenv = Env::new(psi.len());
    let mut renv = Env::new(psi.len());
    dmrg_with_envs(psi, mpo, &mut lenv, &mut renv, opts)
}

/// Two-site DMRG storing environments in caller-provided chains (for
/// example disk-backed ones). Each sweep optimizes bonds `1..Ns−1` left to
/// right and then back; the center ends on site 1.
pub fn dmrg_with_envs<T, S, M, E>(psi: &mut S, mpo: &M, lenv: &mut E, renv: &mut E, opts: &DmrgOptions) -> Result<DmrgResult>
where
    T: Scalar,
    S: StateChain<T> + ?Sized,
    M: SiteChain<T> + ?Sized,
    E: SiteChain<T> + ?Sized,
{
    opts.validate()?;
    let ns = psi.len();
    if ns < 2 {
        return Err(arg_err("two-site DMRG needs at least two sites"));
    }
    if mpo.len() != ns || lenv.len() != ns || renv.len() != ns {
        return Err(shape_err("state, operator and environments must have the same length"));
    }
    if psi.center() == 0 {
        return Err(arg_err("the state has no orthogonality center"));
    }
    move_center(psi, 1, &TruncationSpec::default())?;
    let first = psi.site(1)?.into_owned();
    let nrm = first.norm().re_f64();
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(arg_err("the initial state cannot be normalized"));
    }
    let mut first = first;
    first.div_by(T::of(nrm));
    psi.set_site(1, first)?;
    make_env_into(None, psi, &[mpo], lenv, renv)?;

    let mut reports: Vec<SweepReport> = Vec::new();
    let mut quiet = 0usize;
    let mut lanczos = opts.lanczos.clone();
    for sweep in 1..=opts.sweeps {
        let start = Instant::now();
        let mut energy = f64::NAN;
        let mut max_bond = 0usize;
        let mut max_err = 0.0f64;
        let bonds = (1..ns).map(|i| (i, Direction::Right)).chain((1..ns).rev().map(|i| (i, Direction::Left)));
        for (i, dir) in bonds {
            lanczos.seed = opts.lanczos.seed.wrapping_add((sweep * 2 * ns + i) as u64);
            let a = psi.site(i)?.into_owned();
            let b = psi.site(i + 1)?.into_owned();
            let theta = contract(&a, &[3], &b, &[1])?;
            let (le, re) = (lenv.site(i)?.into_owned(), renv.site(i + 1)?.into_owned());
            let (w1, w2) = (mpo.site(i)?.into_owned(), mpo.site(i + 1)?.into_owned());
            let (e, ground) = lanczos_ground(|t| effective_h_apply(&le, &w1, &w2, &re, t), &theta, &lanczos)?;
            energy = e;
            let split = svd_grouped(&ground, &[vec![1, 2], vec![3, 4]], &opts.trunc, SvdOptions::default())?;
            max_err = max_err.max(split.truncerr);
            max_bond = max_bond.max(split.d.len());
            match dir {
                Direction::Right => {
                    let mut center = split.dv();
                    renormalize(&mut center)?;
                    psi.set_site(i, split.u)?;
                    psi.set_site(i + 1, center)?;
                    psi.set_center(i + 1)?;
                    let next = env_update(Direction::Left, &le, None, &*psi.site(i)?, &[&w1])?;
                    lenv.set_site(i + 1, next)?;
                }
                Direction::Left => {
                    let mut center = split.ud();
                    renormalize(&mut center)?;
                    psi.set_site(i + 1, split.v)?;
                    psi.set_site(i, center)?;
                    psi.set_center(i)?;
                    let next = env_update(Direction::Right, &re, None, &*psi.site(i + 1)?, &[&w2])?;
                    renv.set_site(i, next)?;
                }
            }
        }
        if let Some(prev) = reports.last() {
            if (prev.energy - energy).abs() < opts.convergence {
                quiet += 1;
            } else {
                quiet = 0;
            }
        }
        reports.push(SweepReport { sweep, energy, max_bond_dim: max_bond, max_truncerr: max_err, wall_time: start.elapsed() });
        if opts.early_stop && quiet >= 2 {
            break;
        }
    }
    let energy = reports.last().expect("at least one sweep").energy;
    Ok(DmrgResult { reports, energy })
}

fn renormalize<T: Scalar>(t: &mut DenseTensor<T>) -> Result<()> {
    let n = t.norm().re_f64();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Domain("the local ground state vanished after truncation".into()));
    }
    t.div_by(T::of(n));
    Ok(())
}

//! Disk-resident MPS, MPO and environment chains.
//!
//! Each site tensor lives in its own file in a small versioned binary format:
//! the magic bytes `DMRJ`, a `u32` format version, a `u8` kind code
//! (0 real, 1 complex), a `u64` rank, one `u64` per dimension, then the
//! elements in column-major order as little-endian `f64` (complex entries as
//! `re, im` pairs). Files are written to a temporary file and renamed into
//! place.
//!
//! File names follow `<label><site><extension>` with the site zero-padded
//! to `max(4, digits(Ns))` places.

use std::borrow::Cow;
use std::fs;
use std::io::{Read, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{arg_err, io_err, shape_err, Error, Result};
use crate::network::{check_site, Env, SiteChain, StateChain, MPO, MPS};
use crate::scalar::{KindedScalar, ScalarKind};
use crate::tensor::{AnyTensor, DenseTensor};
use crate::Complex64;

pub const EXTENSION: &str = ".dmrjulia";
pub const MAGIC: &[u8; 4] = b"DMRJ";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_FIXED: usize = 4 + 4 + 1 + 8;

fn kind_code(kind: ScalarKind) -> u8 {
    match kind {
        ScalarKind::RealF64 => 0,
        ScalarKind::ComplexF64 => 1,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), reason: reason.into() }
}

/// Writes `t` to `path` atomically.
pub fn tensor_to_disk<T: KindedScalar>(t: &DenseTensor<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let width = if T::KIND.is_complex() { 16 } else { 8 };
    let mut buf = Vec::with_capacity(HEADER_FIXED + 8 * t.rank() + width * t.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(kind_code(T::KIND));
    buf.extend_from_slice(&(t.rank() as u64).to_le_bytes());
    for &d in t.shape() {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for x in t.data() {
        buf.extend_from_slice(&x.re_f64().to_le_bytes());
        if T::KIND.is_complex() {
            buf.extend_from_slice(&x.im_f64().to_le_bytes());
        }
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(&buf).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

struct Header {
    kind: ScalarKind,
    shape: Vec<usize>,
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<(Header, usize)> {
    if bytes.len() < HEADER_FIXED {
        return Err(format_err(path, "file shorter than the header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(format_err(path, "bad magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(format_err(path, format!("unsupported format version {version}")));
    }
    let kind = match bytes[8] {
        0 => ScalarKind::RealF64,
        1 => ScalarKind::ComplexF64,
        k => return Err(format_err(path, format!("unknown kind code {k}"))),
    };
    let rank = u64::from_le_bytes(bytes[9..17].try_into().expect("8 bytes")) as usize;
    let end = rank
        .checked_mul(8)
        .and_then(|n| n.checked_add(HEADER_FIXED))
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| format_err(path, "truncated shape"))?;
    let shape = bytes[HEADER_FIXED..end]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")) as usize)
        .collect();
    Ok((Header { kind, shape }, end))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(io_err(path))
}

/// Element kind and shape recorded in a tensor file, reading only the
/// header.
pub fn peek_header(path: impl AsRef<Path>) -> Result<(ScalarKind, Vec<usize>)> {
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(io_err(path))?;
    let mut head = vec![0u8; HEADER_FIXED];
    file.read_exact(&mut head).map_err(|_| format_err(path, "file shorter than the header"))?;
    let rank = u64::from_le_bytes(head[9..17].try_into().expect("8 bytes"));
    if rank > 64 {
        return Err(format_err(path, format!("implausible rank {rank}")));
    }
    let mut dims = vec![0u8; 8 * rank as usize];
    file.read_exact(&mut dims).map_err(|_| format_err(path, "truncated shape"))?;
    head.extend_from_slice(&dims);
    let (h, _) = parse_header(path, &head)?;
    Ok((h.kind, h.shape))
}

pub fn peek_kind(path: impl AsRef<Path>) -> Result<ScalarKind> {
    peek_header(path).map(|h| h.0)
}

/// Reads a tensor of either kind.
pub fn any_tensor_from_disk(path: impl AsRef<Path>) -> Result<AnyTensor> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let (header, start) = parse_header(path, &bytes)?;
    let count = header
        .shape
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| format_err(path, "shape overflows"))?;
    let width = if header.kind.is_complex() { 16 } else { 8 };
    let payload = &bytes[start..];
    if Some(payload.len()) != count.checked_mul(width) {
        return Err(format_err(
            path,
            format!("payload has {} bytes, shape {:?} needs {}", payload.len(), header.shape, count * width),
        ));
    }
    let vals = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    Ok(match header.kind {
        ScalarKind::RealF64 => DenseTensor::from_vec(header.shape, vals.collect())?.into(),
        ScalarKind::ComplexF64 => {
            let v: Vec<f64> = vals.collect();
            let data = v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
            DenseTensor::from_vec(header.shape, data)?.into()
        }
    })
}

/// Reads a tensor stored with kind `T::KIND`. A real file may be read as a
/// complex tensor; the reverse is an error.
pub fn tensor_from_disk<T: KindedScalar>(path: impl AsRef<Path>) -> Result<DenseTensor<T>> {
    let path = path.as_ref();
    let any = any_tensor_from_disk(path)?;
    match (any, T::KIND) {
        (AnyTensor::Real(t), _) => Ok(t.cast()),
        (AnyTensor::Complex(t), ScalarKind::ComplexF64) => Ok(t.cast()),
        (AnyTensor::Complex(_), ScalarKind::RealF64) => {
            Err(format_err(path, "file holds a complex tensor, a real one was requested"))
        }
    }
}

/// Directory, label and extension that name a chain's files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NameScheme {
    pub dir: PathBuf,
    pub label: String,
    pub extension: String,
}

impl NameScheme {
    pub fn new(dir: impl Into<PathBuf>, label: impl Into<String>) -> Self {
        NameScheme { dir: dir.into(), label: label.into(), extension: EXTENSION.to_string() }
    }

    pub fn with_extension(mut self, extension: impl Into<String>) -> Self {
        self.extension = extension.into();
        self
    }

    /// Path of `site` in a chain of `ns` sites.
    pub fn path(&self, site: usize, ns: usize) -> PathBuf {
        let width = ns.to_string().len().max(4);
        self.dir.join(format!("{}{:0width$}{}", self.label, site, self.extension))
    }

    pub fn paths(&self, ns: usize) -> Vec<PathBuf> {
        (1..=ns).map(|i| self.path(i, ns)).collect()
    }
}

/// Counts of whole-tensor reads, header-only reads and writes made through a
/// disk chain.
#[derive(Debug, Default)]
pub struct IoCounter {
    reads: AtomicU64,
    header_reads: AtomicU64,
    writes: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IoStats {
    pub reads: u64,
    pub header_reads: u64,
    pub writes: u64,
}

impl IoCounter {
    pub fn stats(&self) -> IoStats {
        IoStats {
            reads: self.reads.load(Ordering::Relaxed),
            header_reads: self.header_reads.load(Ordering::Relaxed),
            writes: self.writes.load(Ordering::Relaxed),
        }
    }
}

/// File list shared by the three disk chain types.
#[derive(Clone, Debug)]
struct DiskChain<T: KindedScalar> {
    names: Vec<PathBuf>,
    present: Vec<bool>,
    counter: Arc<IoCounter>,
    _kind: PhantomData<T>,
}

impl<T: KindedScalar> DiskChain<T> {
    fn empty(names: Vec<PathBuf>) -> Self {
        let n = names.len();
        DiskChain { names, present: vec![false; n], counter: Arc::default(), _kind: PhantomData }
    }

    fn write(&mut self, site: usize, t: &DenseTensor<T>) -> Result<()> {
        tensor_to_disk(t, &self.names[site - 1])?;
        self.counter.writes.fetch_add(1, Ordering::Relaxed);
        self.present[site - 1] = true;
        Ok(())
    }

    fn read(&self, site: usize) -> Result<DenseTensor<T>> {
        check_site(site, self.names.len())?;
        if !self.present[site - 1] {
            return Err(arg_err(format!("no tensor stored for site {site}")));
        }
        let t = tensor_from_disk(&self.names[site - 1])?;
        self.counter.reads.fetch_add(1, Ordering::Relaxed);
        Ok(t)
    }

    /// Handle over existing files; `optional` lets missing files mark
    /// unfilled positions instead of failing. `rank` (for MPS and MPO
    /// chains) enables the link consistency check that catches a wrong
    /// site count. Only headers are read.
    fn open(names: Vec<PathBuf>, next: PathBuf, optional: bool, rank: Option<usize>) -> Result<Self> {
        if names.is_empty() {
            return Err(arg_err("a chain needs at least one site"));
        }
        let mut chain = Self::empty(names);
        let mut shapes = Vec::new();
        for k in 0..chain.names.len() {
            let path = &chain.names[k];
            if !path.exists() {
                if optional {
                    continue;
                }
                return Err(Error::Io {
                    path: path.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "site file missing"),
                });
            }
            let (kind, shape) = peek_header(path)?;
            chain.counter.header_reads.fetch_add(1, Ordering::Relaxed);
            if kind != T::KIND && !(kind == ScalarKind::RealF64 && T::KIND.is_complex()) {
                return Err(format_err(path, format!("kind {kind:?} disagrees with the chain kind {:?}", T::KIND)));
            }
            if let Some(r) = rank {
                if shape.len() != r {
                    return Err(format_err(path, format!("rank {} where {r} was expected", shape.len())));
                }
            }
            shapes.push(shape);
            chain.present[k] = true;
        }
        let ns = chain.names.len();
        let mismatch = || arg_err(format!("files under this name scheme do not form a chain of {ns} sites"));
        if next.exists() {
            return Err(mismatch());
        }
        if let Some(r) = rank {
            if shapes[0][0] != 1 || shapes[ns - 1][r - 1] != 1 {
                return Err(mismatch());
            }
            if shapes.windows(2).any(|w| w[0][r - 1] != w[1][0]) {
                return Err(mismatch());
            }
        }
        Ok(chain)
    }

    fn copy_to(&self, names: Vec<PathBuf>) -> Result<Self> {
        if let Some(p) = names.iter().find(|p| p.exists() || self.names.contains(p)) {
            return Err(arg_err(format!("copy destination {} already exists", p.display())));
        }
        let mut out = Self::empty(names);
        for site in 1..=self.names.len() {
            if self.present[site - 1] {
                let t = self.read(site)?;
                out.write(site, &t)?;
            }
        }
        Ok(out)
    }
}

/// MPS with one file per site.
#[derive(Clone, Debug)]
pub struct LargeMPS<T: KindedScalar> {
    chain: DiskChain<T>,
    oc: usize,
}

/// MPO with one file per site.
#[derive(Clone, Debug)]
pub struct LargeMPO<T: KindedScalar> {
    chain: DiskChain<T>,
}

/// One side of an environment with one file per filled position.
#[derive(Clone, Debug)]
pub struct LargeEnv<T: KindedScalar> {
    chain: DiskChain<T>,
}

macro_rules! disk_common {
    ($ty:ident) => {
        impl<T: KindedScalar> $ty<T> {
            /// Element kind, answered without touching the disk.
            pub fn kind(&self) -> ScalarKind {
                T::KIND
            }

            pub fn names(&self) -> &[PathBuf] {
                &self.chain.names
            }

            pub fn io_stats(&self) -> IoStats {
                self.chain.counter.stats()
            }
        }
    };
}

disk_common!(LargeMPS);
disk_common!(LargeMPO);
disk_common!(LargeEnv);

impl<T: KindedScalar> LargeMPS<T> {
    /// Writes every site of `psi` under `scheme`.
    pub fn from_mps(psi: &MPS<T>, scheme: &NameScheme) -> Result<Self> {
        let n = psi.len();
        let mut chain = DiskChain::empty(scheme.paths(n));
        for i in 1..=n {
            chain.write(i, psi.tensor(i))?;
        }
        Ok(LargeMPS { chain, oc: psi.oc() })
    }

    /// Handle over files already on disk; `oc` is not stored in the files.
    pub fn load(ns: usize, scheme: &NameScheme, oc: usize) -> Result<Self> {
        if oc > ns {
            return Err(Error::Bounds(format!("center {oc} outside 0..={ns}")));
        }
        Ok(LargeMPS { chain: DiskChain::open(scheme.paths(ns), scheme.path(ns + 1, ns), false, Some(3))?, oc })
    }

    pub fn to_memory(&self) -> Result<MPS<T>> {
        let tensors = (1..=self.len()).map(|i| self.chain.read(i)).collect::<Result<_>>()?;
        MPS::new(tensors, Some(self.oc))
    }

    /// File-level copy under new names; the source is untouched.
    pub fn copy_to(&self, scheme: &NameScheme) -> Result<Self> {
        Ok(LargeMPS { chain: self.chain.copy_to(scheme.paths(self.len()))?, oc: self.oc })
    }
}

impl<T: KindedScalar> LargeMPO<T> {
    pub fn from_mpo(mpo: &MPO<T>, scheme: &NameScheme) -> Result<Self> {
        let n = mpo.len();
        let mut chain = DiskChain::empty(scheme.paths(n));
        for i in 1..=n {
            chain.write(i, mpo.tensor(i))?;
        }
        Ok(LargeMPO { chain })
    }

    pub fn load(ns: usize, scheme: &NameScheme) -> Result<Self> {
        Ok(LargeMPO { chain: DiskChain::open(scheme.paths(ns), scheme.path(ns + 1, ns), false, Some(4))? })
    }

    pub fn to_memory(&self) -> Result<MPO<T>> {
        MPO::new((1..=self.len()).map(|i| self.chain.read(i)).collect::<Result<_>>()?)
    }

    pub fn copy_to(&self, scheme: &NameScheme) -> Result<Self> {
        Ok(LargeMPO { chain: self.chain.copy_to(scheme.paths(self.len()))? })
    }
}

impl<T: KindedScalar> LargeEnv<T> {
    /// Empty environment whose positions are written as they are computed.
    pub fn new(ns: usize, scheme: &NameScheme) -> Result<Self> {
        if ns == 0 {
            return Err(arg_err("a chain needs at least one site"));
        }
        Ok(LargeEnv { chain: DiskChain::empty(scheme.paths(ns)) })
    }

    /// Writes the filled positions of both environment sides.
    pub fn from_envs(lenv: &Env<T>, renv: &Env<T>, left: &NameScheme, right: &NameScheme) -> Result<(Self, Self)> {
        if lenv.len() != renv.len() {
            return Err(shape_err("left and right environments have different lengths"));
        }
        if left.paths(lenv.len()) == right.paths(renv.len()) {
            return Err(arg_err("left and right environments need distinct names"));
        }
        let write = |env: &Env<T>, scheme: &NameScheme| -> Result<Self> {
            let mut chain = DiskChain::empty(scheme.paths(env.len()));
            for i in 1..=env.len() {
                if let Some(t) = env.get(i) {
                    chain.write(i, t)?;
                }
            }
            Ok(LargeEnv { chain })
        };
        Ok((write(lenv, left)?, write(renv, right)?))
    }

    /// Handle over existing files; absent files are unfilled positions.
    pub fn load(ns: usize, scheme: &NameScheme) -> Result<Self> {
        Ok(LargeEnv { chain: DiskChain::open(scheme.paths(ns), scheme.path(ns + 1, ns), true, None)? })
    }

    pub fn is_filled(&self, site: usize) -> bool {
        site >= 1 && site <= self.chain.present.len() && self.chain.present[site - 1]
    }

    pub fn to_memory(&self) -> Result<Env<T>> {
        let mut env = Env::new(self.len());
        for i in 1..=self.len() {
            if self.is_filled(i) {
                env.set_site(i, self.chain.read(i)?)?;
            }
        }
        Ok(env)
    }

    pub fn copy_to(&self, scheme: &NameScheme) -> Result<Self> {
        Ok(LargeEnv { chain: self.chain.copy_to(scheme.paths(self.len()))? })
    }
}

impl<T: KindedScalar> SiteChain<T> for LargeMPS<T> {
    fn len(&self) -> usize {
        self.chain.names.len()
    }

    fn site(&self, site: usize) -> Result<Cow<'_, DenseTensor<T>>> {
        self.chain.read(site).map(Cow::Owned)
    }

    fn set_site(&mut self, site: usize, tensor: DenseTensor<T>) -> Result<()> {
        check_site(site, self.len())?;
        if tensor.rank() != 3 {
            return Err(shape_err(format!("MPS site tensor of shape {:?}", tensor.shape())));
        }
        self.chain.write(site, &tensor)
    }
}

impl<T: KindedScalar> StateChain<T> for LargeMPS<T> {
    fn center(&self) -> usize {
        self.oc
    }

    fn set_center(&mut self, oc: usize) -> Result<()> {
        if oc > self.len() {
            return Err(Error::Bounds(format!("center {oc} outside 0..={}", self.len())));
        }
        self.oc = oc;
        Ok(())
    }
}

impl<T: KindedScalar> SiteChain<T> for LargeMPO<T> {
    fn len(&self) -> usize {
        self.chain.names.len()
    }

    fn site(&self, site: usize) -> Result<Cow<'_, DenseTensor<T>>> {
        self.chain.read(site).map(Cow::Owned)
    }

    fn set_site(&mut self, site: usize, tensor: DenseTensor<T>) -> Result<()> {
        check_site(site, self.len())?;
        if tensor.rank() != 4 {
            return Err(shape_err(format!("MPO site tensor of shape {:?}", tensor.shape())));
        }
        self.chain.write(site, &tensor)
    }
}

impl<T: KindedScalar> SiteChain<T> for LargeEnv<T> {
    fn len(&self) -> usize {
        self.chain.names.len()
    }

    fn site(&self, site: usize) -> Result<Cow<'_, DenseTensor<T>>> {
        self.chain.read(site).map(Cow::Owned)
    }

    fn set_site(&mut self, site: usize, tensor: DenseTensor<T>) -> Result<()> {
        check_site(site, self.len())?;
        self.chain.write(site, &tensor)
    }
}

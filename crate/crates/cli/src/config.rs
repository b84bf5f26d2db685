//! `key = value` run configuration.
//!
//! Lines hold one `key = value` pair; `#` starts a comment. Dotted keys
//! group settings (`dmrg.sweeps = 20`). Every error names its line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mpskit::decomposition::TruncationSpec;
use mpskit::dmrg::{DmrgMethod, DmrgOptions, LanczosOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError { line: Some(line), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        ConfigError { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Heisenberg,
    Xxz,
    Hubbard,
    TJ,
    Custom,
}

impl ModelKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "heisenberg" => ModelKind::Heisenberg,
            "xxz" => ModelKind::Xxz,
            "hubbard" => ModelKind::Hubbard,
            "tj" => ModelKind::TJ,
            "custom" => ModelKind::Custom,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Heisenberg => "heisenberg",
            ModelKind::Xxz => "xxz",
            ModelKind::Hubbard => "hubbard",
            ModelKind::TJ => "tj",
            ModelKind::Custom => "custom",
        }
    }

    /// Model keys (after `model.`) this model accepts.
    fn keys(self) -> &'static [&'static str] {
        match self {
            ModelKind::Heisenberg => &["spin", "J"],
            ModelKind::Xxz => &["spin", "J", "Jz"],
            ModelKind::Hubbard => &["t", "U", "mu"],
            ModelKind::TJ => &["t", "J", "mu"],
            ModelKind::Custom => &["file"],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub spin: f64,
    pub j: f64,
    pub jz: f64,
    pub t: f64,
    pub u: f64,
    pub mu: f64,
    /// Block-matrix MPO description for `custom`, resolved against the
    /// configuration file's directory.
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Measurement {
    Energy,
    SzProfile,
    DensityProfile,
    Correlation(String, String),
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measurement::Energy => f.write_str("energy"),
            Measurement::SzProfile => f.write_str("sz_profile"),
            Measurement::DensityProfile => f.write_str("n_profile"),
            Measurement::Correlation(a, b) => write!(f, "correlation:{a},{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Storage {
    Memory,
    /// Tensors on disk; `None` means `<output>/tensors`.
    Disk(Option<PathBuf>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub sites: usize,
    pub dmrg: DmrgOptions,
    /// Bond dimension of the random starting state.
    pub init_bond: usize,
    pub measurements: Vec<Measurement>,
    pub storage: Storage,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "model",
    "sites",
    "seed",
    "output",
    "measure",
    "storage",
    "storage.dir",
    "init.bond",
    "model.spin",
    "model.J",
    "model.Jz",
    "model.t",
    "model.U",
    "model.mu",
    "model.file",
    "dmrg.sweeps",
    "dmrg.method",
    "dmrg.maxm",
    "dmrg.minm",
    "dmrg.cutoff",
    "dmrg.convergence",
    "dmrg.early_stop",
    "dmrg.solver_iterations",
    "dmrg.solver_tolerance",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn parsed<V: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<(usize, V)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .parse::<V>()
                .map(|v| Some((line, v)))
                .map_err(|_| ConfigError::at(line, format!("{key}: expected {what}, got \"{raw}\""))),
        }
    }

    fn float(&mut self, key: &str) -> Result<Option<(usize, f64)>, ConfigError> {
        match self.parsed::<f64>(key, "a number")? {
            Some((line, v)) if !v.is_finite() => Err(ConfigError::at(line, format!("{key} must be finite"))),
            other => Ok(other),
        }
    }

    fn count(&mut self, key: &str) -> Result<Option<(usize, usize)>, ConfigError> {
        self.parsed::<usize>(key, "a nonnegative integer")
    }
}

fn parse_measurements(line: usize, raw: &str) -> Result<Vec<Measurement>, ConfigError> {
    let mut out = Vec::new();
    for item in raw.split_whitespace() {
        let m = match item {
            "energy" => Measurement::Energy,
            "sz_profile" => Measurement::SzProfile,
            "n_profile" => Measurement::DensityProfile,
            other => match other.strip_prefix("correlation:").and_then(|r| r.split_once(',')) {
                Some((a, b)) if !a.is_empty() && !b.is_empty() => Measurement::Correlation(a.into(), b.into()),
                _ => {
                    return Err(ConfigError::at(
                        line,
                        format!("unknown measurement \"{other}\"; expected energy, sz_profile, n_profile or correlation:A,B"),
                    ))
                }
            },
        };
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(ConfigError::at(line, "measure lists no measurements"));
    }
    Ok(out)
}

/// Parses and validates a configuration. Relative paths are resolved
/// against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (k, raw_line) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got \"{content}\"")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::at(line, format!("unknown key \"{key}\"")));
        }
        if value.is_empty() {
            return Err(ConfigError::at(line, format!("{key} has no value")));
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
            return Err(ConfigError::at(line, format!("{key} already set on line {first}")));
        }
    }
    let mut e = Entries { map };

    let (model_line, model_name) = e.take("model").ok_or_else(|| ConfigError::global("missing required key \"model\""))?;
    let kind = ModelKind::parse(&model_name).ok_or_else(|| {
        ConfigError::at(model_line, format!("unknown model \"{model_name}\"; expected heisenberg, xxz, hubbard, tj or custom"))
    })?;
    for key in ["spin", "J", "Jz", "t", "U", "mu", "file"] {
        let full = format!("model.{key}");
        if let Some((line, _)) = e.map.get(&full) {
            if !kind.keys().contains(&key) {
                return Err(ConfigError::at(*line, format!("{full} does not apply to model {}", kind.name())));
            }
        }
    }
    let mut model = ModelConfig { kind, spin: 0.5, j: 1.0, jz: 1.0, t: 1.0, u: 0.0, mu: 0.0, file: None };
    if let Some((line, s)) = e.float("model.spin")? {
        if !(s > 0.0) || (2.0 * s - (2.0 * s).round()).abs() > 1e-12 {
            return Err(ConfigError::at(line, "model.spin must be a positive multiple of 1/2"));
        }
        model.spin = s;
    }
    for (key, slot) in [
        ("model.J", &mut model.j),
        ("model.Jz", &mut model.jz),
        ("model.t", &mut model.t),
        ("model.U", &mut model.u),
        ("model.mu", &mut model.mu),
    ] {
        if let Some((_, v)) = e.float(key)? {
            *slot = v;
        }
    }
    if let Some((_, f)) = e.take("model.file") {
        model.file = Some(base_dir.join(f));
    }
    if kind == ModelKind::Custom && model.file.is_none() {
        return Err(ConfigError::at(model_line, "model custom needs model.file"));
    }

    let (sites_line, sites) = e.count("sites")?.ok_or_else(|| ConfigError::global("missing required key \"sites\""))?;
    if sites < 2 {
        return Err(ConfigError::at(sites_line, "sites must be at least 2"));
    }

    let mut dmrg = DmrgOptions::default();
    if let Some((line, v)) = e.count("dmrg.sweeps")? {
        if v == 0 {
            return Err(ConfigError::at(line, "dmrg.sweeps must be at least 1"));
        }
        dmrg.sweeps = v;
    }
    if let Some((line, m)) = e.take("dmrg.method") {
        dmrg.method = m.parse::<DmrgMethod>().map_err(|err| ConfigError::at(line, err.to_string()))?;
    }
    let mut trunc: TruncationSpec = dmrg.trunc.clone();
    if let Some((_, v)) = e.count("dmrg.maxm")? {
        trunc.m = v;
    }
    if let Some((_, v)) = e.count("dmrg.minm")? {
        trunc.minm = v;
    }
    if let Some((line, v)) = e.float("dmrg.cutoff")? {
        if !(0.0..=1.0).contains(&v) {
            return Err(ConfigError::at(line, "dmrg.cutoff must lie in [0, 1]"));
        }
        trunc.cutoff = v;
    }
    dmrg.trunc = trunc;
    if let Some((line, v)) = e.float("dmrg.convergence")? {
        if !(v > 0.0) {
            return Err(ConfigError::at(line, "dmrg.convergence must be positive"));
        }
        dmrg.convergence = v;
    }
    if let Some((_, v)) = e.parsed::<bool>("dmrg.early_stop", "true or false")? {
        dmrg.early_stop = v;
    }
    let mut lanczos = LanczosOptions::default();
    if let Some((line, v)) = e.count("dmrg.solver_iterations")? {
        if v == 0 {
            return Err(ConfigError::at(line, "dmrg.solver_iterations must be at least 1"));
        }
        lanczos.max_iter = v;
    }
    if let Some((line, v)) = e.float("dmrg.solver_tolerance")? {
        if !(v > 0.0) {
            return Err(ConfigError::at(line, "dmrg.solver_tolerance must be positive"));
        }
        lanczos.tol = v;
    }

    let seed = e.parsed::<u64>("seed", "a nonnegative integer")?.map_or(0, |(_, v)| v);
    lanczos.seed = seed;
    dmrg.lanczos = lanczos;

    let init_bond = match e.count("init.bond")? {
        Some((line, 0)) => return Err(ConfigError::at(line, "init.bond must be at least 1")),
        Some((_, v)) => v,
        None => 4,
    };
    let measurements = match e.take("measure") {
        Some((line, raw)) => parse_measurements(line, &raw)?,
        None => vec![Measurement::Energy],
    };
    let storage_dir = e.take("storage.dir").map(|(line, d)| (line, base_dir.join(d)));
    let storage = match e.take("storage") {
        None => Storage::Memory,
        Some((_, s)) if s == "memory" => Storage::Memory,
        Some((_, s)) if s == "disk" => Storage::Disk(storage_dir.clone().map(|d| d.1)),
        Some((line, s)) => return Err(ConfigError::at(line, format!("storage must be memory or disk, got \"{s}\""))),
    };
    if let (Storage::Memory, Some((line, _))) = (&storage, &storage_dir) {
        return Err(ConfigError::at(*line, "storage.dir needs storage = disk"));
    }
    let output = e.take("output").map(|(_, o)| base_dir.join(o));
    debug_assert!(e.map.is_empty(), "every known key is consumed");

    Ok(RunConfig { model, sites, dmrg, init_bond, measurements, storage, seed, output })
}

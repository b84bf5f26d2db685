//! One configured ground-state run from model to output files.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mpskit::models::{heisenberg_mpo, hubbard_mpo, tj_mpo, xxz_mpo};
use mpskit::network::{correlation, correlation_matrix, random_mps, SiteChain};
use mpskit::operators::{fermion_ops, spin_ops, tj_ops, SiteOperatorSet};
use mpskit::storage::NameScheme;
use mpskit::{dmrg, dmrg_with_envs, DmrgResult, LargeEnv, LargeMpo, LargeMps, Mpo, SweepReport, Tensor};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Measurement, ModelKind, RunConfig, Storage};
use crate::custom::{load_custom_mpo, resolve};

/// Whether a failure comes from the user's input or from the computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Runtime,
}

#[derive(Debug)]
pub struct RunError {
    pub class: ErrorClass,
    pub stage: &'static str,
    pub message: String,
}

impl RunError {
    fn config(stage: &'static str, message: impl Into<String>) -> Self {
        RunError { class: ErrorClass::Config, stage, message: message.into() }
    }

    fn runtime(stage: &'static str) -> impl FnOnce(mpskit::Error) -> Self {
        move |e| RunError { class: ErrorClass::Runtime, stage, message: e.to_string() }
    }

    fn io<'a>(stage: &'static str, path: &'a Path) -> impl FnOnce(std::io::Error) -> Self + 'a {
        move |e| RunError { class: ErrorClass::Runtime, stage, message: format!("{}: {e}", path.display()) }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for RunError {}

/// Measurement values; profiles and correlations are real for the
/// real-valued models handled here.
#[derive(Clone, Debug, PartialEq)]
pub enum MeasuredValue {
    Energy(f64),
    Profile(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub energy: f64,
    pub reports: Vec<SweepReport>,
    pub measurements: Vec<(Measurement, MeasuredValue)>,
    pub summary_path: PathBuf,
    pub results_path: PathBuf,
    /// Directory of the `.dmrjulia` tensor files for disk runs.
    pub tensor_dir: Option<PathBuf>,
}

/// A measurement resolved against the model's operators.
enum Plan {
    Energy,
    Profile(Tensor),
    Matrix { a: Tensor, b: Tensor, parity: Option<Tensor> },
}

pub struct Model {
    pub mpo: Mpo,
    pub ops: SiteOperatorSet<f64>,
}

/// Hamiltonian and on-site operators of the configured model.
pub fn build_model(cfg: &RunConfig) -> Result<Model, RunError> {
    const STAGE: &str = "model";
    let m = &cfg.model;
    let ns = cfg.sites;
    let built = match m.kind {
        ModelKind::Heisenberg => heisenberg_mpo(ns, m.spin, m.j).and_then(|h| Ok((h, spin_ops(m.spin)?))),
        ModelKind::Xxz => xxz_mpo(ns, m.spin, m.j, m.jz).and_then(|h| Ok((h, spin_ops(m.spin)?))),
        ModelKind::Hubbard => hubbard_mpo(ns, m.t, m.u, m.mu).and_then(|h| {
            let mut ops = fermion_ops::<f64>();
            let sz = &(ops.get("Nup")? - ops.get("Ndn")?) * 0.5;
            ops.insert("Sz", sz)?;
            Ok((h, ops))
        }),
        ModelKind::TJ => tj_mpo(ns, m.t, m.j, m.mu).map(|h| (h, tj_ops())),
        ModelKind::Custom => {
            let path = m.file.as_deref().expect("validated by the parser");
            let (h, ops) = load_custom_mpo(path, ns).map_err(|e| RunError::config(STAGE, e))?;
            return Ok(Model { mpo: h, ops });
        }
    };
    let (mpo, ops) = built.map_err(RunError::runtime(STAGE))?;
    Ok(Model { mpo, ops })
}

fn is_fermionic(name: &str) -> bool {
    name.starts_with('C')
}

fn plan(ops: &SiteOperatorSet<f64>, m: &Measurement) -> Result<Plan, RunError> {
    const STAGE: &str = "measurement setup";
    let get = |name: &str| resolve(ops, name).map_err(|e| RunError::config(STAGE, format!("{m}: {e}")));
    Ok(match m {
        Measurement::Energy => Plan::Energy,
        Measurement::SzProfile => Plan::Profile(get("Sz")?),
        Measurement::DensityProfile => Plan::Profile(get("Ndens")?),
        Measurement::Correlation(a, b) => {
            let parity = match (is_fermionic(a), is_fermionic(b)) {
                (true, true) => Some(get("F")?),
                (false, false) => None,
                _ => {
                    return Err(RunError::config(
                        STAGE,
                        format!("{m}: a single fermionic operator has no parity-preserving correlation"),
                    ))
                }
            };
            Plan::Matrix { a: get(a)?, b: get(b)?, parity }
        }
    })
}

fn measure<S: SiteChain<f64> + ?Sized>(psi: &S, energy: f64, plan: &Plan) -> mpskit::Result<MeasuredValue> {
    let ns = psi.len();
    Ok(match plan {
        Plan::Energy => MeasuredValue::Energy(energy),
        Plan::Profile(op) => MeasuredValue::Profile(correlation(psi, &[op], None)?.data().to_vec()),
        Plan::Matrix { a, b, parity } => {
            let m = correlation_matrix(psi, a, b, parity.as_ref())?;
            let d = m.data();
            MeasuredValue::Matrix((0..ns).map(|i| (0..ns).map(|j| d[i + j * ns]).collect()).collect())
        }
    })
}

/// Fixed-point text with negative zero printed as zero.
pub fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

const DECIMALS: usize = 10;

/// `results.csv` contents: sweep table then one block per measurement.
/// Timings are left out so that equal runs give equal files.
pub fn results_csv(reports: &[SweepReport], measurements: &[(Measurement, MeasuredValue)]) -> String {
    let mut out = String::from("# schema=1\n# block=sweeps\nsweep,energy,max_bond_dim,max_truncerr\n");
    for r in reports {
        let _ = writeln!(out, "{},{},{},{:.6e}", r.sweep, fixed(r.energy, DECIMALS), r.max_bond_dim, r.max_truncerr);
    }
    for (m, v) in measurements {
        let _ = writeln!(out, "# block={m}");
        match v {
            MeasuredValue::Energy(e) => {
                let _ = writeln!(out, "energy\n{}", fixed(*e, DECIMALS));
            }
            MeasuredValue::Profile(p) => {
                out.push_str("site,value\n");
                for (i, x) in p.iter().enumerate() {
                    let _ = writeln!(out, "{},{}", i + 1, fixed(*x, DECIMALS));
                }
            }
            MeasuredValue::Matrix(rows) => {
                out.push_str("i,j,value\n");
                for (i, row) in rows.iter().enumerate() {
                    for (j, x) in row.iter().enumerate() {
                        let _ = writeln!(out, "{},{},{}", i + 1, j + 1, fixed(*x, DECIMALS));
                    }
                }
            }
        }
    }
    out
}

fn summary_txt(cfg: &RunConfig, result: &DmrgResult, wall: f64, tensor_dir: Option<&Path>) -> String {
    let max_m = result.reports.iter().map(|r| r.max_bond_dim).max().unwrap_or(0);
    let max_err = result.reports.iter().map(|r| r.max_truncerr).fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(s, "model = {}", cfg.model.kind.name());
    let _ = writeln!(s, "sites = {}", cfg.sites);
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "method = {}", cfg.dmrg.method);
    let _ = writeln!(s, "sweeps = {}", result.reports.len());
    let _ = writeln!(s, "E = {}", fixed(result.energy, 9));
    let _ = writeln!(s, "max_bond_dim = {max_m}");
    let _ = writeln!(s, "max_truncerr = {max_err:.6e}");
    if let Some(d) = tensor_dir {
        let _ = writeln!(s, "tensors = {}", d.display());
    }
    let _ = writeln!(s, "wall_time_s = {wall:.3}");
    s
}

/// Runs the configuration and writes `summary.txt` and `results.csv` into
/// `output`. With `verbose`, one line per sweep goes to stderr.
pub fn run(cfg: &RunConfig, output: &Path, verbose: bool) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let model = build_model(cfg)?;
    let plans: Vec<Plan> = cfg.measurements.iter().map(|m| plan(&model.ops, m)).collect::<Result<_, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let psi = random_mps::<f64, _>(&[model.ops.dim()], cfg.sites, cfg.init_bond, &mut rng)
        .map_err(RunError::runtime("initial state"))?;

    std::fs::create_dir_all(output).map_err(RunError::io("output", output))?;
    let (result, measured, tensor_dir) = match &cfg.storage {
        Storage::Memory => {
            let mut psi = psi;
            let result = dmrg(&mut psi, &model.mpo, &cfg.dmrg).map_err(RunError::runtime("dmrg"))?;
            let measured = plans
                .iter()
                .map(|p| measure(&psi, result.energy, p))
                .collect::<mpskit::Result<Vec<_>>>()
                .map_err(RunError::runtime("measurement"))?;
            (result, measured, None)
        }
        Storage::Disk(dir) => {
            let dir = dir.clone().unwrap_or_else(|| output.join("tensors"));
            std::fs::create_dir_all(&dir).map_err(RunError::io("storage", &dir))?;
            let store = RunError::runtime("storage");
            let setup = || -> mpskit::Result<_> {
                let psi = LargeMps::from_mps(&psi, &NameScheme::new(&dir, "psi_"))?;
                let h = LargeMpo::from_mpo(&model.mpo, &NameScheme::new(&dir, "H_"))?;
                let lenv = LargeEnv::new(cfg.sites, &NameScheme::new(&dir, "Lenv_"))?;
                let renv = LargeEnv::new(cfg.sites, &NameScheme::new(&dir, "Renv_"))?;
                Ok((psi, h, lenv, renv))
            };
            let (mut psi, h, mut lenv, mut renv) = setup().map_err(store)?;
            let result = dmrg_with_envs(&mut psi, &h, &mut lenv, &mut renv, &cfg.dmrg).map_err(RunError::runtime("dmrg"))?;
            let measured = plans
                .iter()
                .map(|p| measure(&psi, result.energy, p))
                .collect::<mpskit::Result<Vec<_>>>()
                .map_err(RunError::runtime("measurement"))?;
            (result, measured, Some(dir))
        }
    };
    if verbose {
        for r in &result.reports {
            eprintln!(
                "sweep {:>3}  E = {}  m = {:>4}  truncerr = {:.3e}  t = {:.3}s",
                r.sweep,
                fixed(r.energy, 12),
                r.max_bond_dim,
                r.max_truncerr,
                r.wall_time.as_secs_f64()
            );
        }
    }

    let measurements: Vec<(Measurement, MeasuredValue)> = cfg.measurements.iter().cloned().zip(measured).collect();
    let results_path = output.join("results.csv");
    std::fs::write(&results_path, results_csv(&result.reports, &measurements))
        .map_err(RunError::io("output", &results_path))?;
    let summary_path = output.join("summary.txt");
    let wall = start.elapsed().as_secs_f64();
    std::fs::write(&summary_path, summary_txt(cfg, &result, wall, tensor_dir.as_deref()))
        .map_err(RunError::io("output", &summary_path))?;

    Ok(RunOutcome { energy: result.energy, reports: result.reports, measurements, summary_path, results_path, tensor_dir })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_normalizes_negative_zero() {
        assert_eq!(fixed(-0.0, 3), "0.000");
        assert_eq!(fixed(-1e-12, 9), "0.000000000");
        assert_eq!(fixed(-0.75, 9), "-0.750000000");
        assert_eq!(fixed(2.5, 1), "2.5");
    }
}

//! Text description of a bulk operator matrix.
//!
//! ```text
//! operators = spin 0.5      # or: fermion, tj
//! size = 5
//! 1 1 = Id
//! 5 5 = Id
//! 5 2 = Sp
//! 2 1 = 0.5*Sm
//! 5 1 = -0.1*Sz + 0.2*Sx
//! ```
//!
//! Rows and columns are 1-based; unlisted entries are zero. A term is a
//! product of `*`-separated factors, each a number or an operator name;
//! a name ending in `dag` is the adjoint of the named operator.

use std::path::Path;

use mpskit::network::{make_mpo, OperatorMatrix};
use mpskit::operators::{fermion_ops, spin_ops, tj_ops, SiteOperatorSet};
use mpskit::{Mpo, Tensor};

use crate::config::ConfigError;

/// Looks up `name`, taking the adjoint for a trailing `dag`.
pub fn resolve(set: &SiteOperatorSet<f64>, name: &str) -> Result<Tensor, String> {
    if let Ok(op) = set.get(name) {
        return Ok(op.clone());
    }
    if let Some(base) = name.strip_suffix("dag") {
        if let Ok(op) = set.get(base) {
            return op.adjoint().map_err(|e| e.to_string());
        }
    }
    set.get(name).cloned().map_err(|e| e.to_string())
}

fn parse_set(line: usize, raw: &str) -> Result<SiteOperatorSet<f64>, ConfigError> {
    let words: Vec<&str> = raw.split_whitespace().collect();
    match words.as_slice() {
        ["fermion"] => Ok(fermion_ops()),
        ["tj"] => Ok(tj_ops()),
        ["spin", s] => {
            let s: f64 = s.parse().map_err(|_| err(line, format!("bad spin \"{s}\"")))?;
            spin_ops(s).map_err(|e| err(line, e.to_string()))
        }
        _ => Err(err(line, format!("operators must be \"spin S\", \"fermion\" or \"tj\", got \"{raw}\""))),
    }
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line: Some(line), message: message.into() }
}

fn parse_entry(line: usize, set: &SiteOperatorSet<f64>, expr: &str) -> Result<Tensor, ConfigError> {
    let mut total = set.zero().clone();
    for term in expr.split('+') {
        let term = term.trim();
        if term.is_empty() {
            return Err(err(line, format!("empty term in \"{expr}\"")));
        }
        let mut coeff = 1.0;
        let mut op: Option<Tensor> = None;
        for factor in term.split('*').map(str::trim) {
            if let Ok(x) = factor.parse::<f64>() {
                if !x.is_finite() {
                    return Err(err(line, format!("coefficient {factor} is not finite")));
                }
                coeff *= x;
                continue;
            }
            let (sign, name) = match factor.strip_prefix('-') {
                Some(rest) => (-1.0, rest.trim()),
                None => (1.0, factor),
            };
            coeff *= sign;
            let next = resolve(set, name).map_err(|e| err(line, e))?;
            op = Some(match op {
                None => next,
                Some(prev) => prev.matmul(&next).map_err(|e| err(line, e.to_string()))?,
            });
        }
        let op = op.ok_or_else(|| err(line, format!("term \"{term}\" names no operator")))?;
        total = &total + &(&op * coeff);
    }
    Ok(total)
}

/// Parses the operator matrix text and returns it with its operator set.
pub fn parse_operator_matrix(text: &str) -> Result<(OperatorMatrix<f64>, SiteOperatorSet<f64>), ConfigError> {
    let mut set = None;
    let mut size = None;
    let mut entries = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (lhs, rhs) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `lhs = rhs`, got \"{content}\"")))?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        match lhs {
            "operators" if set.is_none() => set = Some(parse_set(line, rhs)?),
            "size" if size.is_none() => {
                let k: usize = rhs.parse().map_err(|_| err(line, format!("bad size \"{rhs}\"")))?;
                if k < 2 {
                    return Err(err(line, "size must be at least 2"));
                }
                size = Some(k);
            }
            "operators" | "size" => return Err(err(line, format!("{lhs} given twice"))),
            _ => {
                let pos: Vec<usize> = lhs
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|_| err(line, format!("expected `row column`, got \"{lhs}\"")))?;
                if pos.len() != 2 {
                    return Err(err(line, format!("expected `row column`, got \"{lhs}\"")));
                }
                entries.push((line, pos[0], pos[1], rhs.to_string()));
            }
        }
    }
    let set = set.ok_or_else(|| ConfigError { line: None, message: "missing \"operators\" line".into() })?;
    let k = size.ok_or_else(|| ConfigError { line: None, message: "missing \"size\" line".into() })?;
    let mut blocks = vec![vec![set.zero().clone(); k]; k];
    let mut seen = vec![vec![None; k]; k];
    for (line, r, c, expr) in entries {
        if r == 0 || c == 0 || r > k || c > k {
            return Err(err(line, format!("entry ({r}, {c}) lies outside a {k}×{k} matrix")));
        }
        if let Some(first) = seen[r - 1][c - 1] {
            return Err(err(line, format!("entry ({r}, {c}) already set on line {first}")));
        }
        seen[r - 1][c - 1] = Some(line);
        blocks[r - 1][c - 1] = parse_entry(line, &set, &expr)?;
    }
    Ok((blocks, set))
}

/// Reads an operator matrix file and builds the lower-triangular MPO.
pub fn load_custom_mpo(path: &Path, ns: usize) -> Result<(Mpo, SiteOperatorSet<f64>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (blocks, set) = parse_operator_matrix(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let mpo = make_mpo(&blocks, ns, true).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((mpo, set))
}

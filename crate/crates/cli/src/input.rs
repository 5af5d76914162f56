//! Resolution of `--map`, `--density` and `--p` arguments.

use std::path::Path;

use cproots_core::commutative::ProbVector;
use cproots_core::{fixtures, CMap, StateSpec};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::matrix_file;

/// A parsed input together with its provenance record for the report.
pub struct Loaded<T> {
    pub value: T,
    pub record: Value,
}

fn record(source: &str, bytes: &[u8]) -> Value {
    json!({ "source": source, "sha256": hex::encode(Sha256::digest(bytes)) })
}

fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(Path::new(path))
        .map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))
}

pub const FIXTURE_NAMES: &str = "swap, diagonal:D, halving, offdiag:S, swap-scale:S, swap-halving, \
     transpose:D, corner, identity:D, halving-root:N, swap-halving-root:N";

fn parse_param<T: std::str::FromStr>(name: &str, param: Option<&str>) -> Result<T, CliError> {
    let raw = param.ok_or_else(|| CliError::Input(format!("fixture {name} needs a parameter")))?;
    raw.parse()
        .map_err(|_| CliError::Input(format!("bad parameter {raw:?} for fixture {name}")))
}

fn dim_param(name: &str, param: Option<&str>) -> Result<usize, CliError> {
    let d: usize = parse_param(name, param)?;
    if d == 0 || d > 16 {
        return Err(CliError::Input(format!("fixture {name} needs 1 <= D <= 16, got {d}")));
    }
    Ok(d)
}

pub fn fixture(spec: &str) -> Result<CMap, CliError> {
    let (name, param) = match spec.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (spec, None),
    };
    let no_param = |map: CMap| match param {
        None => Ok(map),
        Some(_) => Err(CliError::Input(format!("fixture {name} takes no parameter"))),
    };
    match name {
        "swap" => no_param(fixtures::diagonal_swap()),
        "halving" => no_param(fixtures::offdiag_scale(0.5)),
        "swap-halving" => no_param(fixtures::swap_halving()),
        "corner" => no_param(fixtures::corner_expectation_m3()),
        "diagonal" => Ok(fixtures::diagonal_restriction(dim_param(name, param)?)),
        "transpose" => Ok(fixtures::transpose_map(dim_param(name, param)?)),
        "identity" => Ok(CMap::identity(dim_param(name, param)?)),
        "offdiag" => Ok(fixtures::offdiag_scale(parse_param(name, param)?)),
        "swap-scale" => Ok(fixtures::swap_scale(parse_param(name, param)?)),
        "halving-root" => Ok(fixtures::halving_root(dim_param(name, param)?)),
        "swap-halving-root" => Ok(fixtures::swap_halving_root(dim_param(name, param)?)),
        _ => Err(CliError::Input(format!(
            "unknown fixture {name:?}; known fixtures: {FIXTURE_NAMES}"
        ))),
    }
}

/// `fixture:NAME[:PARAM]` or a superoperator matrix file.
pub fn load_map(arg: &str) -> Result<Loaded<CMap>, CliError> {
    if let Some(spec) = arg.strip_prefix("fixture:") {
        return Ok(Loaded {
            value: fixture(spec)?,
            record: record(arg, arg.as_bytes()),
        });
    }
    let text = read_file(arg)?;
    let s = matrix_file::parse(&text, arg)?;
    let n = s.nrows();
    let d = (n as f64).sqrt().round() as usize;
    if s.ncols() != n || d * d != n || d == 0 {
        return Err(CliError::Input(format!(
            "{arg}: a superoperator must be d^2 x d^2, got {}x{}",
            n,
            s.ncols()
        )));
    }
    Ok(Loaded {
        value: CMap::from_superop(s)?,
        record: record(arg, text.as_bytes()),
    })
}

fn parse_number(term: &str) -> Result<f64, CliError> {
    let bad = || CliError::Input(format!("cannot parse {term:?} as a number or fraction"));
    let value = match term.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => term.parse().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// `(a, b, ...)` or `[a, b, ...]` with decimal or fractional entries.
pub fn parse_tuple(text: &str) -> Result<Vec<f64>, CliError> {
    let t = text.trim();
    let inner = t
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .or_else(|| t.strip_prefix('[').and_then(|s| s.strip_suffix(']')))
        .ok_or_else(|| CliError::Input(format!("expected a parenthesized list, got {t:?}")))?;
    inner.split(',').map(|s| parse_number(s.trim())).collect()
}

fn is_literal(arg: &str) -> bool {
    let t = arg.trim_start();
    t.starts_with('(') || t.starts_with('[')
}

/// A literal tuple or a file holding a JSON array of numbers.
pub fn load_prob(arg: &str) -> Result<Loaded<ProbVector>, CliError> {
    let (entries, bytes) = if is_literal(arg) {
        (parse_tuple(arg)?, arg.as_bytes().to_vec())
    } else {
        let text = read_file(arg)?;
        let v: Vec<f64> = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{arg}:{}:{}: {e}", e.line(), e.column())))?;
        (v, text.into_bytes())
    };
    Ok(Loaded {
        value: ProbVector::new(entries)?,
        record: record(arg, &bytes),
    })
}

/// A literal tuple of eigenvalues (diagonal density) or a density matrix file.
pub fn load_density(arg: &str) -> Result<Loaded<StateSpec>, CliError> {
    if is_literal(arg) {
        return Ok(Loaded {
            value: StateSpec::diagonal(&parse_tuple(arg)?)?,
            record: record(arg, arg.as_bytes()),
        });
    }
    let text = read_file(arg)?;
    Ok(Loaded {
        value: StateSpec::from_density(matrix_file::parse(&text, arg)?)?,
        record: record(arg, text.as_bytes()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_decimals() {
        assert_eq!(parse_tuple("(1/2, 1/4, 0.25)").unwrap(), vec![0.5, 0.25, 0.25]);
        assert_eq!(parse_tuple("[1]").unwrap(), vec![1.0]);
        assert!(parse_tuple("1/2,1/2").is_err());
        assert!(parse_tuple("(1/0, 1)").is_err());
    }

    #[test]
    fn fixture_names_resolve() {
        for name in FIXTURE_NAMES.split(", ") {
            let spec = name.replace(":D", ":2").replace(":S", ":0.5").replace(":N", ":3");
            assert!(fixture(&spec).is_ok(), "{spec}");
        }
        assert!(fixture("swap:2").is_err());
        assert!(fixture("nope").is_err());
    }
}

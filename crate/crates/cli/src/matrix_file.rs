//! `{"rows", "cols", "data": [[re, im], ...]}` with row-major data.

use std::fmt::Write as _;
use std::path::Path;

use cproots_core::numerics::c;
use cproots_core::CMatrix;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

pub fn parse(text: &str, origin: &str) -> Result<CMatrix, CliError> {
    let raw: RawMatrix = serde_json::from_str(text).map_err(|e| {
        CliError::Input(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
    })?;
    if raw.data.len() != raw.rows * raw.cols {
        return Err(CliError::Input(format!(
            "{origin}: expected {} entries for a {}x{} matrix, found {}",
            raw.rows * raw.cols,
            raw.rows,
            raw.cols,
            raw.data.len()
        )));
    }
    if let Some(k) = raw.data.iter().position(|[re, im]| !re.is_finite() || !im.is_finite()) {
        return Err(CliError::Input(format!("{origin}: entry {k} is not finite")));
    }
    Ok(CMatrix::from_fn(raw.rows, raw.cols, |i, j| {
        let [re, im] = raw.data[i * raw.cols + j];
        c(re, im)
    }))
}

/// Serializes with 17 significant digits, so parsing gives back the same bits.
pub fn to_json(m: &CMatrix) -> String {
    let mut out = format!("{{\n  \"rows\": {},\n  \"cols\": {},\n  \"data\": [", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let sep = if i == 0 && j == 0 { "" } else { "," };
            let _ = write!(out, "{sep}\n    [{:.16e}, {:.16e}]", z.re, z.im);
        }
    }
    out.push_str("\n  ]\n}\n");
    out
}

/// The same layout as a JSON value, for embedding in reports.
pub fn to_value(m: &CMatrix) -> Value {
    let data: Vec<[f64; 2]> = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
        .collect();
    json!({ "rows": m.nrows(), "cols": m.ncols(), "data": data })
}

pub fn write(path: &Path, m: &CMatrix) -> Result<(), CliError> {
    std::fs::write(path, to_json(m))
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

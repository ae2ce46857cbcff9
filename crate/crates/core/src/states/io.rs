//! JSON state files: `{"dims": [d1, d2], "matrix": [[[re, im], ...], ...], "label": "..."}`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{c, BipartiteDims, CMatrix};
use crate::metrology::DensityMatrix;

#[derive(Debug, Deserialize)]
pub struct StateFile {
    pub dims: [usize; 2],
    pub matrix: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub label: Option<String>,
}

/// Parses and validates a state from JSON text.
pub fn parse_state(text: &str) -> Result<(DensityMatrix, Option<String>)> {
    let file: StateFile = serde_json::from_str(text)?;
    let [d1, d2] = file.dims;
    let dims = BipartiteDims::new(d1, d2)?;
    let n = dims.total();
    if file.matrix.len() != n || file.matrix.iter().any(|row| row.len() != n) {
        let cols = file.matrix.first().map_or(0, |r| r.len());
        return Err(Error::DimensionMismatch(format!(
            "dims [{d1}, {d2}] require a {n}x{n} matrix, file has {}x{cols}",
            file.matrix.len()
        )));
    }
    let m = CMatrix::from_fn(n, n, |i, j| {
        let [re, im] = file.matrix[i][j];
        c(re, im)
    });
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Format("non-finite matrix entry".to_string()));
    }
    Ok((DensityMatrix::bipartite(m, dims)?, file.label))
}

pub fn load_state(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_state(&text)?.0)
}

/// Serializes with 17 significant digits so that loading reproduces every entry exactly.
pub fn state_to_json(rho: &DensityMatrix, label: Option<&str>) -> Result<String> {
    let dims = rho.require_dims()?;
    let m = rho.matrix();
    let n = m.nrows();
    let mut s = String::new();
    write!(s, "{{\n  \"dims\": [{}, {}],\n", dims.d1, dims.d2).unwrap();
    if let Some(label) = label {
        writeln!(s, "  \"label\": {},", serde_json::to_string(label)?).unwrap();
    }
    s.push_str("  \"matrix\": [\n");
    for i in 0..n {
        s.push_str("    [");
        for j in 0..n {
            let z = m[(i, j)];
            write!(s, "[{:.16e}, {:.16e}]", z.re, z.im).unwrap();
            if j + 1 < n {
                s.push_str(", ");
            }
        }
        s.push(']');
        if i + 1 < n {
            s.push(',');
        }
        s.push('\n');
    }
    s.push_str("  ]\n}\n");
    Ok(s)
}

pub fn save_state(rho: &DensityMatrix, label: Option<&str>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, state_to_json(rho, label)?)?;
    Ok(())
}

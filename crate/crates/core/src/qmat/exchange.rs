//! Matrix exchange format: a JSON document with `dims` (subsystem dimension
//! list) and `matrix` (row-major `[re, im]` pairs). The writer emits 17
//! significant digits and a fixed layout so that re-serialization is
//! byte-identical.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Result, SepError};
use crate::qmat::HermitianMatrix;

#[derive(Deserialize)]
struct ExchangeDoc {
    dims: Vec<usize>,
    matrix: Vec<[f64; 2]>,
}

/// Serializes with a stable layout; 17 significant digits per component.
pub fn write_matrix(h: &HermitianMatrix) -> String {
    let dims: Vec<usize> = match h.dims() {
        Some(d) => d.to_vec(),
        None => vec![h.dim()],
    };
    let mut out = String::new();
    out.push_str("{\n  \"dims\": [");
    for (i, d) in dims.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&d.to_string());
    }
    out.push_str("],\n  \"matrix\": [\n");
    let n = h.dim();
    for i in 0..n {
        for j in 0..n {
            let z = h.entry(i, j);
            out.push_str(&format!("    [{:.16e}, {:.16e}]", z.re, z.im));
            if i * n + j + 1 < n * n {
                out.push(',');
            }
            out.push('\n');
        }
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn read_matrix(text: &str) -> Result<HermitianMatrix> {
    let doc: ExchangeDoc =
        serde_json::from_str(text).map_err(|e| SepError::Format(e.to_string()))?;
    if doc.dims.is_empty() || doc.dims.iter().any(|&d| d == 0) {
        return Err(SepError::Format("dims must be nonempty positive integers".into()));
    }
    let dim: usize = doc.dims.iter().product();
    if doc.matrix.len() != dim * dim {
        return Err(SepError::Format(format!(
            "matrix has {} entries, expected {} for dims {:?}",
            doc.matrix.len(),
            dim * dim,
            doc.dims
        )));
    }
    let mat = DMatrix::from_fn(dim, dim, |i, j| {
        let [re, im] = doc.matrix[i * dim + j];
        Complex64::new(re, im)
    });
    HermitianMatrix::new(mat, Some(doc.dims))
}

pub fn write_matrix_file(h: &HermitianMatrix, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, write_matrix(h))?;
    Ok(())
}

pub fn read_matrix_file(path: &std::path::Path) -> Result<HermitianMatrix> {
    let text = std::fs::read_to_string(path)?;
    read_matrix(&text)
}

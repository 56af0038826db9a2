//! CSV and JSON encodings of matrices and vectors.
//!
//! CSV is row-major with every float printed to 17 significant digits, so
//! that reading a file back reproduces the doubles exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::LatticeSpec;

/// Formats a double with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Row-major CSV, one matrix row per line.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Reads a rectangular CSV of floats. Blank lines are skipped.
pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: `{cell}`: {e}", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    from_rows(rows)
}

fn from_rows(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("rows of unequal length".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// One value per line.
pub fn vector_to_csv(v: &[f64]) -> String {
    v.iter().map(|&x| format_float(x) + "\n").collect()
}

pub fn vector_from_csv(text: &str) -> Result<Vec<f64>> {
    let m = matrix_from_csv(text)?;
    if m.ncols() > 1 {
        return Err(Error::Parse("expected a single column".into()));
    }
    Ok(m.iter().copied().collect())
}

/// JSON envelope shared by kernels, Hamiltonians, eigenvectors and
/// correlation matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEnvelope {
    pub recipe: String,
    pub lattice: LatticeSpec,
    /// Row-major.
    pub matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
}

impl MatrixEnvelope {
    pub fn new(
        recipe: impl Into<String>,
        lattice: LatticeSpec,
        matrix: &DMatrix<f64>,
        pi: Option<&DVector<f64>>,
    ) -> Self {
        Self {
            recipe: recipe.into(),
            lattice,
            matrix: matrix
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            pi: pi.map(|p| p.iter().copied().collect()),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        from_rows(self.matrix.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("envelope: {e}")))
    }
}

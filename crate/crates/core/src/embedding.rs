//! Row-major feature matrices.

use crate::error::{ensure_finite, Error, Result};

/// A dense row-major matrix of feature vectors, one sample per row.
///
/// Values are held in 64-bit regardless of the on-disk precision.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let expected = rows
            .checked_mul(dim)
            .ok_or_else(|| Error::ShapeMismatch(format!("{rows}x{dim} overflows")))?;
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{dim} matrix needs {expected} values, got {}",
                data.len()
            )));
        }
        ensure_finite(&data)?;
        Ok(Self { rows, dim, data })
    }

    pub fn from_f32(rows: usize, dim: usize, data: &[f32]) -> Result<Self> {
        Self::new(rows, dim, data.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact(0) panics; a zero-width matrix still has `rows` rows.
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Contiguous block of rows `[start, end)` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> EmbeddingMatrix {
        EmbeddingMatrix {
            rows: end - start,
            dim: self.dim,
            data: self.data[start * self.dim..end * self.dim].to_vec(),
        }
    }

    /// Scales every row to unit Euclidean norm. Zero rows are an error.
    pub fn l2_normalized(&self) -> Result<EmbeddingMatrix> {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.iter_rows() {
            let norm = l2_norm(row);
            if norm == 0.0 {
                return Err(Error::ZeroVector);
            }
            data.extend(row.iter().map(|v| v / norm));
        }
        Ok(EmbeddingMatrix {
            rows: self.rows,
            dim: self.dim,
            data,
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

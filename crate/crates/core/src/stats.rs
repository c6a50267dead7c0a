//! Gaussian sufficient statistics of a feature distribution.
//!
//! Statistics are accumulated in fixed-size row shards that are merged in a
//! fixed order, so the result is bit-identical for any thread count.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{ensure_finite, Error, Result};

/// Rows per shard in [`estimate_stats`]. Part of the numerical contract:
/// changing it changes results in the last few bits.
pub const SHARD_ROWS: usize = 4096;

/// Sample count, mean and unbiased covariance of a feature distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    n: u64,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianStats {
    /// Builds statistics from explicit parameters. The covariance is
    /// symmetrized as `(C + Cᵀ) / 2`.
    pub fn new(n: u64, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::FewerThanTwoSamples { rows: n as usize });
        }
        if cov.nrows() != cov.ncols() {
            return Err(Error::NonSquare {
                rows: cov.nrows(),
                cols: cov.ncols(),
            });
        }
        if cov.nrows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.nrows(),
            });
        }
        ensure_finite(mean.as_slice())?;
        ensure_finite(cov.as_slice())?;
        let cov = symmetrize(&cov);
        Ok(Self { n, mean, cov })
    }

    /// Statistics with a diagonal covariance.
    pub fn from_diagonal(n: u64, mean: &[f64], variances: &[f64]) -> Result<Self> {
        if mean.len() != variances.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: variances.len(),
            });
        }
        Self::new(
            n,
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal(&DVector::from_column_slice(variances)),
        )
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Running moments with an un-normalized scatter matrix; `n` may be 1 here.
#[derive(Debug, Clone)]
struct Moments {
    n: u64,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
}

impl Moments {
    fn of_rows(emb: &EmbeddingMatrix, start: usize, end: usize) -> Moments {
        let rows = end - start;
        let dim = emb.dim();
        let block = DMatrix::from_row_slice(rows, dim, &emb.as_slice()[start * dim..end * dim]);
        let mean = block.row_mean().transpose();
        let mut centered = block;
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let scatter = centered.tr_mul(&centered);
        Moments {
            n: rows as u64,
            mean,
            scatter,
        }
    }

    fn merge(&self, other: &Moments) -> Moments {
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = &other.mean - &self.mean;
        let mean = &self.mean + &delta * (nb / n);
        let scatter = &self.scatter + &other.scatter + (&delta * delta.transpose()) * (na * nb / n);
        Moments {
            n: self.n + other.n,
            mean,
            scatter,
        }
    }

    fn from_stats(s: &GaussianStats) -> Moments {
        Moments {
            n: s.n,
            mean: s.mean.clone(),
            scatter: &s.cov * (s.n - 1) as f64,
        }
    }

    fn into_stats(self) -> Result<GaussianStats> {
        let denom = (self.n - 1) as f64;
        GaussianStats::new(self.n, self.mean, self.scatter / denom)
    }
}

/// Column-wise sample mean and unbiased (n−1) sample covariance.
pub fn estimate_stats(emb: &EmbeddingMatrix) -> Result<GaussianStats> {
    if emb.rows() < 2 {
        return Err(Error::FewerThanTwoSamples { rows: emb.rows() });
    }
    ensure_finite(emb.as_slice())?;
    let shards: Vec<Moments> = (0..emb.rows().div_ceil(SHARD_ROWS))
        .into_par_iter()
        .map(|s| {
            let start = s * SHARD_ROWS;
            let end = (start + SHARD_ROWS).min(emb.rows());
            Moments::of_rows(emb, start, end)
        })
        .collect();
    let mut iter = shards.into_iter();
    let first = iter.next().expect("at least one shard");
    iter.fold(first, |acc, m| acc.merge(&m)).into_stats()
}

/// Combines statistics of two disjoint sample sets into the statistics of
/// their union.
pub fn merge_stats(a: &GaussianStats, b: &GaussianStats) -> Result<GaussianStats> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Moments::from_stats(a)
        .merge(&Moments::from_stats(b))
        .into_stats()
}

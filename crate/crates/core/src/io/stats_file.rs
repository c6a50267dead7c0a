//! The `.stats` file: serialized [`GaussianStats`].
//!
//! Little-endian: magic `GRST`, `u32` version = 1, `u64` n, `u64` d, then
//! `d` f64 mean values and `d × d` f64 covariance values in row-major order.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::tensor::check_magic;
use crate::error::{Error, Result};
use crate::stats::GaussianStats;

pub const STATS_MAGIC: [u8; 4] = *b"GRST";
pub const STATS_VERSION: u32 = 1;
const HEADER: usize = 24;

pub fn encode_stats(stats: &GaussianStats) -> Vec<u8> {
    let d = stats.dim();
    let mut out = Vec::with_capacity(HEADER + 8 * (d + d * d));
    out.extend_from_slice(&STATS_MAGIC);
    out.extend_from_slice(&STATS_VERSION.to_le_bytes());
    out.extend_from_slice(&stats.n().to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    for v in stats.mean().iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for i in 0..d {
        for j in 0..d {
            out.extend_from_slice(&stats.cov()[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn decode_stats(bytes: &[u8]) -> Result<GaussianStats> {
    check_magic(bytes, STATS_MAGIC)?;
    if bytes.len() < HEADER {
        return Err(Error::TruncatedFile {
            expected: HEADER as u64,
            found: bytes.len() as u64,
        });
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != STATS_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n = word(8);
    let d = word(16);
    let expected = d
        .checked_mul(d)
        .and_then(|dd| dd.checked_add(d))
        .and_then(|k| k.checked_mul(8))
        .and_then(|p| p.checked_add(HEADER as u64))
        .ok_or_else(|| Error::ShapeMismatch(format!("stats dimension {d} overflows")))?;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::TruncatedFile { expected, found });
    }
    if found > expected {
        return Err(Error::TrailingBytes(found - expected));
    }
    let values: Vec<f64> = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    let d = d as usize;
    GaussianStats::new(
        n,
        DVector::from_column_slice(&values[..d]),
        DMatrix::from_row_slice(d, d, &values[d..]),
    )
}

pub fn write_stats(path: impl AsRef<Path>, stats: &GaussianStats) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_stats(stats)).map_err(|e| Error::io(path, e))
}

pub fn read_stats(path: impl AsRef<Path>) -> Result<GaussianStats> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_stats(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.125, 0.125, 1.0 / 3.0]);
        let s = GaussianStats::new(7, DVector::from_column_slice(&[0.1, -5.0]), cov).unwrap();
        let bytes = encode_stats(&s);
        assert_eq!(bytes.len(), 24 + 8 * 6);
        assert_eq!(decode_stats(&bytes).unwrap(), s);
    }

    #[test]
    fn rejects_malformed() {
        let s = GaussianStats::from_diagonal(3, &[1.0], &[2.0]).unwrap();
        let good = encode_stats(&s);
        assert!(matches!(
            decode_stats(&good[..30]),
            Err(Error::TruncatedFile { .. })
        ));
        let mut long = good.clone();
        long.extend_from_slice(&[0; 3]);
        assert!(matches!(decode_stats(&long), Err(Error::TrailingBytes(3))));
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_stats(&bad), Err(Error::BadMagic { .. })));
        let mut one = good;
        one[8..16].copy_from_slice(&1u64.to_le_bytes());
        assert!(matches!(
            decode_stats(&one),
            Err(Error::FewerThanTwoSamples { .. })
        ));
    }
}

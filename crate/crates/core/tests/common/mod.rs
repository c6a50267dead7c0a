//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use t2ieval::GaussianStats;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_t2ieval"))
}

pub fn run(args: &[&str]) -> Output {
    bin()
        .env_remove("T2IEVAL_THREADS")
        .args(args)
        .output()
        .expect("spawn t2ieval")
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `G·Gᵀ / k` for a `d × k` standard normal `G`; rank-deficient when `k < d`.
pub fn random_psd(rng: &mut ChaCha8Rng, d: usize, k: usize) -> DMatrix<f64> {
    let g = normal_matrix(rng, d, k);
    &g * g.transpose() / k as f64
}

pub fn random_stats(rng: &mut ChaCha8Rng, d: usize) -> GaussianStats {
    let mean = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    GaussianStats::new(1000, mean, random_psd(rng, d, d + 4)).unwrap()
}

/// `|a − b| ≤ tol · max(|a|, |b|)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// A report with the wall-clock fields removed.
pub fn stable_report(json: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(json).expect("report is JSON");
    let obj = v.as_object_mut().expect("report is an object");
    obj.remove("timestamp_unix");
    obj.remove("duration_ms");
    v
}

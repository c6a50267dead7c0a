//! Regenerates the golden fixtures under `tests/fixtures/`.
//!
//! ```text
//! cargo run -p t2ieval --example make_fixtures
//! ```
//!
//! Output is deterministic; `tests/golden.rs` pins every file by SHA-256.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};
use t2ieval::io::{self, bundle, Tensor, TensorData};
use t2ieval::{CaptionBundle, EmbeddingMatrix, GaussianStats};

const CREATED: &str = "2026-01-01T00:00:00Z";
const ENCODER: &str = "synthetic-fixture";

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> EmbeddingMatrix {
    let data = (0..rows * dim)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    EmbeddingMatrix::new(rows, dim, data).unwrap()
}

fn basis(dim: usize, i: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = scale;
    v
}

fn put_bundle(dir: &Path, captions: &CaptionBundle) {
    if dir.exists() {
        fs::remove_dir_all(dir).unwrap();
    }
    io::write_bundle(dir, captions, ENCODER, CREATED).unwrap();
}

fn put_tensor(path: &Path, dims: Vec<u64>, data: TensorData) {
    io::write_tensor(path, &Tensor::new(dims, data).unwrap()).unwrap();
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let bundles = root.join("bundles");
    let tensors = root.join("tensors");
    let stats = root.join("stats");
    for d in [&bundles, &tensors, &stats] {
        fs::create_dir_all(d).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20260101);

    // M=2, d=4, R=3, captions of 2 and 3 words.
    let pair = CaptionBundle::new(
        gaussian(&mut rng, 2, 4),
        gaussian(&mut rng, 2, 4),
        Some(vec![gaussian(&mut rng, 3, 4), gaussian(&mut rng, 3, 4)]),
        Some(vec![gaussian(&mut rng, 2, 4), gaussian(&mut rng, 3, 4)]),
    )
    .unwrap();
    put_bundle(&bundles.join("pair_m2"), &pair);
    put_bundle(
        &bundles.join("sentence_only_m2"),
        &CaptionBundle::new(pair.images().clone(), pair.sentences().clone(), None, None).unwrap(),
    );

    // M=3 random bundle with uneven captions, for word-level composition checks.
    let random3 = CaptionBundle::new(
        gaussian(&mut rng, 3, 6),
        gaussian(&mut rng, 3, 6),
        Some((0..3).map(|_| gaussian(&mut rng, 4, 6)).collect()),
        Some((1..=3).map(|t| gaussian(&mut rng, t, 6)).collect()),
    )
    .unwrap();
    put_bundle(&bundles.join("random_m3"), &random3);

    // Orthonormal images and sentences; regions and words along the same axis.
    let m = 10;
    let e =
        EmbeddingMatrix::from_rows(&(0..m).map(|i| basis(m, i, 1.0)).collect::<Vec<_>>()).unwrap();
    let regions = (0..m)
        .map(|i| EmbeddingMatrix::from_rows(&[basis(m, i, 1.0), basis(m, i, 0.5)]).unwrap())
        .collect();
    let words = (0..m)
        .map(|i| EmbeddingMatrix::from_rows(&[basis(m, i, 1.0), basis(m, i, 2.0)]).unwrap())
        .collect();
    put_bundle(
        &bundles.join("identity_m10"),
        &CaptionBundle::new(e.clone(), e, Some(regions), Some(words)).unwrap(),
    );

    // Images on a circle at 2πi/M, sentences rotated by −1.4 steps: for every
    // query the partner is third, behind offsets +1 and +2.
    let circle = |shift: f64| -> EmbeddingMatrix {
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + shift) / m as f64;
                vec![a.cos(), a.sin(), 0.0, 0.0]
            })
            .collect();
        EmbeddingMatrix::from_rows(&rows).unwrap()
    };
    put_bundle(
        &bundles.join("planted_rank3_m10"),
        &CaptionBundle::new(circle(0.0), circle(-1.4), None, None).unwrap(),
    );

    // A single pair: every contrastive loss is zero.
    let one = |v: [f64; 3]| EmbeddingMatrix::from_rows(&[v]).unwrap();
    put_bundle(
        &bundles.join("single_m1"),
        &CaptionBundle::new(
            one([1.0, 0.5, -0.25]),
            one([0.5, 1.0, 0.0]),
            Some(vec![EmbeddingMatrix::from_rows(&[
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.5],
            ])
            .unwrap()]),
            Some(vec![one([0.25, 0.5, 1.0])]),
        )
        .unwrap(),
    );

    // Two identical pairs: every score is equal.
    let img = EmbeddingMatrix::from_rows(&[[0.3, -0.2, 0.9]; 2]).unwrap();
    let sent = EmbeddingMatrix::from_rows(&[[0.1, 0.4, 0.7]; 2]).unwrap();
    let reg = EmbeddingMatrix::from_rows(&[[1.0, 0.0, 0.2], [0.0, 1.0, -0.3]]).unwrap();
    let wrd = EmbeddingMatrix::from_rows(&[[0.5, 0.5, 0.0], [0.0, 0.2, 1.0]]).unwrap();
    put_bundle(
        &bundles.join("equal_m2"),
        &CaptionBundle::new(
            img,
            sent,
            Some(vec![reg.clone(), reg]),
            Some(vec![wrd.clone(), wrd]),
        )
        .unwrap(),
    );

    // Malformed bundles, written by hand on top of a valid one.
    let bad_offsets = bundles.join("bad_offsets");
    put_bundle(&bad_offsets, &pair);
    put_tensor(
        &bad_offsets.join(bundle::WORDS_FILE),
        vec![1, 4],
        TensorData::F32(vec![0.5; 4]),
    );
    put_tensor(
        &bad_offsets.join(bundle::OFFSETS_FILE),
        vec![3],
        TensorData::I64(vec![0, 2, 1]),
    );
    let manifest_path = bad_offsets.join(bundle::MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).unwrap();
    fs::write(
        &manifest_path,
        text.replace("\"n_total\": 5", "\"n_total\": 1"),
    )
    .unwrap();

    let wrong_m = bundles.join("manifest_mismatch");
    put_bundle(&wrong_m, &pair.clone());
    let manifest_path = wrong_m.join(bundle::MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).unwrap();
    fs::write(&manifest_path, text.replace("\"m\": 2", "\"m\": 3")).unwrap();

    // Tensors.
    put_tensor(
        &tensors.join("single.grb"),
        vec![1],
        TensorData::F32(vec![0.0]),
    );
    put_tensor(
        &tensors.join("sample_1d.grb"),
        vec![2, 1],
        TensorData::F32(vec![0.0, 2.0]),
    );
    put_tensor(
        &tensors.join("rank3.grb"),
        vec![2, 2, 2],
        TensorData::F32((0..8).map(|i| i as f32).collect()),
    );
    let ten = io::tensor::encode_tensor(
        &Tensor::new(
            vec![10],
            TensorData::F32((0..10).map(|i| i as f32).collect()),
        )
        .unwrap(),
    );
    let mut bad = ten.clone();
    bad[..4].copy_from_slice(b"XXXX");
    fs::write(tensors.join("bad_magic.grb"), bad).unwrap();
    fs::write(tensors.join("truncated.grb"), &ten[..ten.len() - 4]).unwrap();
    let mut trailing = ten.clone();
    trailing.extend_from_slice(&[0, 0, 0, 0]);
    fs::write(tensors.join("trailing.grb"), trailing).unwrap();
    let mut nan = ten.clone();
    let at = nan.len() - 8;
    nan[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
    fs::write(tensors.join("nan.grb"), nan).unwrap();
    let mut version = ten.clone();
    version[4] = 9;
    fs::write(tensors.join("bad_version.grb"), version).unwrap();
    let mut dtype = ten;
    dtype[8] = 5;
    fs::write(tensors.join("bad_dtype.grb"), dtype).unwrap();

    // Diagonal statistics pair with Fréchet distance 7.
    io::write_stats(
        stats.join("diag_a.stats"),
        &GaussianStats::from_diagonal(10, &[0.0, 0.0], &[1.0, 1.0]).unwrap(),
    )
    .unwrap();
    io::write_stats(
        stats.join("diag_b.stats"),
        &GaussianStats::from_diagonal(10, &[1.0, 1.0], &[4.0, 9.0]).unwrap(),
    )
    .unwrap();

    write_digests(&root);
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(&path, out);
        } else if path.file_name().unwrap() != "SHA256SUMS" {
            out.push(path);
        }
    }
}

fn write_digests(root: &Path) {
    let mut files = Vec::new();
    collect_files(root, &mut files);
    files.sort();
    let mut listing = String::new();
    for f in files {
        let digest = Sha256::digest(fs::read(&f).unwrap());
        let rel = f.strip_prefix(root).unwrap();
        listing.push_str(&format!("{}  {}\n", hex(&digest), rel.display()));
    }
    fs::write(root.join("SHA256SUMS"), listing).unwrap();
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

//! Embedding bundles: a directory holding `manifest.json` and role-named
//! `.grb` tensors.
//!
//! | file               | dtype | shape       |
//! |--------------------|-------|-------------|
//! | `img.grb`          | f32   | M × d       |
//! | `sent.grb`         | f32   | M × d       |
//! | `regions.grb`      | f32   | M × R × d   |
//! | `words.grb`        | f32   | N_total × d |
//! | `word_offsets.grb` | i64   | M + 1       |
//!
//! Caption `k` owns word rows `[offsets[k], offsets[k + 1])`. Region and
//! word files are optional; sentence-level commands only need the first two.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tensor::{read_tensor, write_tensor, Dtype, Tensor, TensorData};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::itm::CaptionBundle;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const IMAGES_FILE: &str = "img.grb";
pub const SENTENCES_FILE: &str = "sent.grb";
pub const REGIONS_FILE: &str = "regions.grb";
pub const WORDS_FILE: &str = "words.grb";
pub const OFFSETS_FILE: &str = "word_offsets.grb";
pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleCounts {
    pub m: u64,
    pub d: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_total: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub counts: BundleCounts,
    pub encoder: String,
    pub created: String,
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub captions: CaptionBundle,
}

impl Bundle {
    /// Fails with `MissingFile` unless region and word features are present.
    pub fn require_word_level(&self) -> Result<()> {
        if self.captions.regions().is_none() {
            return Err(Error::MissingFile(self.dir.join(REGIONS_FILE)));
        }
        if self.captions.words().is_none() {
            return Err(Error::MissingFile(self.dir.join(WORDS_FILE)));
        }
        Ok(())
    }
}

fn mismatch(what: &str, manifest: u64, found: u64) -> Error {
    Error::ManifestMismatch(format!("manifest {what} = {manifest}, tensor has {found}"))
}

fn read_optional(path: &Path) -> Result<Option<Tensor>> {
    match read_tensor(path) {
        Ok(t) => Ok(Some(t)),
        Err(Error::MissingFile(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn read_pair_matrix(dir: &Path, file: &str, counts: &BundleCounts) -> Result<EmbeddingMatrix> {
    let tensor = read_tensor(dir.join(file))?;
    let dims = tensor.expect_shape(Dtype::F32, 2, file)?;
    if dims[0] as u64 != counts.m {
        return Err(mismatch(
            &format!("m ({file} rows)"),
            counts.m,
            dims[0] as u64,
        ));
    }
    if dims[1] as u64 != counts.d {
        return Err(mismatch(
            &format!("d ({file} columns)"),
            counts.d,
            dims[1] as u64,
        ));
    }
    tensor.to_embedding_matrix()
}

fn split_regions(tensor: &Tensor, counts: &BundleCounts) -> Result<Vec<EmbeddingMatrix>> {
    let dims = tensor.expect_shape(Dtype::F32, 3, REGIONS_FILE)?;
    let (m, r, d) = (dims[0], dims[1], dims[2]);
    if m as u64 != counts.m {
        return Err(mismatch("m (regions)", counts.m, m as u64));
    }
    if d as u64 != counts.d {
        return Err(mismatch("d (regions)", counts.d, d as u64));
    }
    if let Some(expected) = counts.r {
        if expected != r as u64 {
            return Err(mismatch("r", expected, r as u64));
        }
    }
    if r == 0 {
        return Err(Error::ShapeMismatch(
            "regions.grb has zero regions per image".into(),
        ));
    }
    let values = tensor.as_f32().expect("checked dtype");
    (0..m)
        .map(|i| EmbeddingMatrix::from_f32(r, d, &values[i * r * d..(i + 1) * r * d]))
        .collect()
}

/// Checks that offsets start at 0, end at `n_total`, and give every caption
/// at least one word. Returns them as `usize`.
pub fn validate_offsets(offsets: &[i64], m: usize, n_total: usize) -> Result<Vec<usize>> {
    if offsets.len() != m + 1 {
        return Err(Error::OffsetsInvalid(format!(
            "expected {} offsets for {m} captions, found {}",
            m + 1,
            offsets.len()
        )));
    }
    if offsets[0] != 0 {
        return Err(Error::OffsetsInvalid(format!(
            "offsets[0] = {}, expected 0",
            offsets[0]
        )));
    }
    if offsets[m] != n_total as i64 {
        return Err(Error::OffsetsInvalid(format!(
            "offsets[{m}] = {}, expected {n_total} word rows",
            offsets[m]
        )));
    }
    if let Some(k) = offsets.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::OffsetsInvalid(format!(
            "offsets decrease at caption {k}: {} -> {}",
            offsets[k],
            offsets[k + 1]
        )));
    }
    if let Some(k) = offsets.windows(2).position(|w| w[1] == w[0]) {
        return Err(Error::OffsetsInvalid(format!("caption {k} has no words")));
    }
    Ok(offsets.iter().map(|&o| o as usize).collect())
}

fn split_words(
    words: &Tensor,
    offsets: &Tensor,
    counts: &BundleCounts,
) -> Result<Vec<EmbeddingMatrix>> {
    let dims = words.expect_shape(Dtype::F32, 2, WORDS_FILE)?;
    let (n_total, d) = (dims[0], dims[1]);
    if d as u64 != counts.d {
        return Err(mismatch("d (words)", counts.d, d as u64));
    }
    if let Some(expected) = counts.n_total {
        if expected != n_total as u64 {
            return Err(mismatch("n_total", expected, n_total as u64));
        }
    }
    offsets.expect_shape(Dtype::I64, 1, OFFSETS_FILE)?;
    let offsets = validate_offsets(
        offsets.as_i64().expect("checked dtype"),
        counts.m as usize,
        n_total,
    )?;
    let values = words.as_f32().expect("checked dtype");
    offsets
        .windows(2)
        .map(|w| EmbeddingMatrix::from_f32(w[1] - w[0], d, &values[w[0] * d..w[1] * d]))
        .collect()
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::ManifestMismatch(format!("{}: {e}", path.display())))?;
    if manifest.schema_version != BUNDLE_SCHEMA_VERSION {
        return Err(Error::UnsupportedVersion(manifest.schema_version));
    }
    Ok(manifest)
}

/// Loads and cross-validates a bundle directory.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<Bundle> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let counts = &manifest.counts;
    let images = read_pair_matrix(dir, IMAGES_FILE, counts)?;
    let sentences = read_pair_matrix(dir, SENTENCES_FILE, counts)?;

    let regions = read_optional(&dir.join(REGIONS_FILE))?
        .map(|t| split_regions(&t, counts))
        .transpose()?;

    let words = read_optional(&dir.join(WORDS_FILE))?;
    let offsets = read_optional(&dir.join(OFFSETS_FILE))?;
    let words = match (words, offsets) {
        (Some(w), Some(o)) => Some(split_words(&w, &o, counts)?),
        (None, None) => None,
        (Some(_), None) => return Err(Error::MissingFile(dir.join(OFFSETS_FILE))),
        (None, Some(_)) => return Err(Error::MissingFile(dir.join(WORDS_FILE))),
    };

    let captions = CaptionBundle::new(images, sentences, regions, words)?;
    Ok(Bundle {
        dir: dir.to_path_buf(),
        manifest,
        captions,
    })
}

/// Writes `captions` as a bundle into `dir` (created if absent). All images
/// must have the same number of regions.
pub fn write_bundle(
    dir: impl AsRef<Path>,
    captions: &CaptionBundle,
    encoder: &str,
    created: &str,
) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (m, d) = (captions.m() as u64, captions.dim() as u64);
    let mut counts = BundleCounts {
        m,
        d,
        r: None,
        n_total: None,
    };

    write_tensor(
        dir.join(IMAGES_FILE),
        &Tensor::from_embedding(captions.images())?,
    )?;
    write_tensor(
        dir.join(SENTENCES_FILE),
        &Tensor::from_embedding(captions.sentences())?,
    )?;

    if let Some(regions) = captions.regions() {
        let r = regions[0].rows();
        if regions.iter().any(|g| g.rows() != r) {
            return Err(Error::ShapeMismatch(
                "every image needs the same number of regions".into(),
            ));
        }
        let values = regions
            .iter()
            .flat_map(|g| g.as_slice().iter().map(|&v| v as f32))
            .collect();
        write_tensor(
            dir.join(REGIONS_FILE),
            &Tensor::new(vec![m, r as u64, d], TensorData::F32(values))?,
        )?;
        counts.r = Some(r as u64);
    }

    if let Some(words) = captions.words() {
        let mut offsets = vec![0i64];
        let mut values = Vec::new();
        for caption in words {
            values.extend(caption.as_slice().iter().map(|&v| v as f32));
            offsets.push(offsets.last().unwrap() + caption.rows() as i64);
        }
        let n_total = *offsets.last().unwrap() as u64;
        write_tensor(
            dir.join(WORDS_FILE),
            &Tensor::new(vec![n_total, d], TensorData::F32(values))?,
        )?;
        write_tensor(
            dir.join(OFFSETS_FILE),
            &Tensor::new(vec![m + 1], TensorData::I64(offsets))?,
        )?;
        counts.n_total = Some(n_total);
    }

    let manifest = Manifest {
        schema_version: BUNDLE_SCHEMA_VERSION,
        counts,
        encoder: encoder.to_string(),
        created: created.to_string(),
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

//! The `.grb` binary tensor format.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size        | field                                  |
//! |--------|-------------|----------------------------------------|
//! | 0      | 4           | magic `GREB`                           |
//! | 4      | 4           | version, `u32` = 1                     |
//! | 8      | 1           | dtype, `u8` (0 = f32, 1 = i64)         |
//! | 9      | 1           | ndim, `u8`                             |
//! | 10     | 8 × ndim    | dims, `u64` each                       |
//! | …      | numel × 4/8 | row-major payload                      |
//!
//! The payload must end exactly at end of file.

use std::path::Path;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: [u8; 4] = *b"GREB";
pub const TENSOR_VERSION: u32 = 1;
const FIXED_HEADER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Dtype {
    F32 = 0,
    I64 = 1,
}

impl Dtype {
    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::I64),
            other => Err(Error::UnsupportedDtype(other)),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::I64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    I64(Vec<i64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::I64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            TensorData::F32(_) => Dtype::F32,
            TensorData::I64(_) => Dtype::I64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<u64>,
    data: TensorData,
}

fn numel(dims: &[u64]) -> Result<u64> {
    if dims.is_empty() {
        return Err(Error::ShapeMismatch(
            "tensor needs at least one dimension".into(),
        ));
    }
    if dims.len() > u8::MAX as usize {
        return Err(Error::ShapeMismatch(format!("{} dimensions", dims.len())));
    }
    dims.iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::ShapeMismatch(format!("element count of {dims:?} overflows u64")))
}

impl Tensor {
    pub fn new(dims: Vec<u64>, data: TensorData) -> Result<Self> {
        let n = numel(&dims)?;
        if n != data.len() as u64 {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} hold {n} elements, got {}",
                data.len()
            )));
        }
        if let TensorData::F32(values) = &data {
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { index });
            }
        }
        Ok(Self { dims, data })
    }

    pub fn from_embedding(emb: &EmbeddingMatrix) -> Result<Self> {
        let values = emb.as_slice().iter().map(|&v| v as f32).collect();
        Self::new(
            vec![emb.rows() as u64, emb.dim() as u64],
            TensorData::F32(values),
        )
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.data {
            TensorData::F32(v) => Some(v),
            TensorData::I64(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<&[i64]> {
        match &self.data {
            TensorData::I64(v) => Some(v),
            TensorData::F32(_) => None,
        }
    }

    /// Checks dtype and rank, returning the dims as `usize`.
    pub fn expect_shape(&self, dtype: Dtype, rank: usize, what: &str) -> Result<Vec<usize>> {
        if self.dtype() != dtype {
            return Err(Error::ShapeMismatch(format!(
                "{what}: expected {dtype:?} tensor, found {:?}",
                self.dtype()
            )));
        }
        if self.dims.len() != rank {
            return Err(Error::ShapeMismatch(format!(
                "{what}: expected rank {rank}, found rank {} (dims {:?})",
                self.dims.len(),
                self.dims
            )));
        }
        self.dims
            .iter()
            .map(|&d| {
                usize::try_from(d)
                    .map_err(|_| Error::ShapeMismatch(format!("{what}: dim {d} too large")))
            })
            .collect()
    }

    /// Interprets a rank-2 float tensor as rows of feature vectors.
    pub fn to_embedding_matrix(&self) -> Result<EmbeddingMatrix> {
        let dims = self.expect_shape(Dtype::F32, 2, "embedding tensor")?;
        EmbeddingMatrix::from_f32(dims[0], dims[1], self.as_f32().expect("checked dtype"))
    }
}

pub fn encode_tensor(tensor: &Tensor) -> Vec<u8> {
    let elem = tensor.dtype().size();
    let mut out =
        Vec::with_capacity(FIXED_HEADER + 8 * tensor.dims.len() + elem * tensor.data.len());
    out.extend_from_slice(&TENSOR_MAGIC);
    out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    out.push(tensor.dtype() as u8);
    out.push(tensor.dims.len() as u8);
    for d in &tensor.dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    match &tensor.data {
        TensorData::F32(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::I64(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

fn truncated(expected: u64, found: usize) -> Error {
    Error::TruncatedFile {
        expected,
        found: found as u64,
    }
}

pub(crate) fn check_magic(bytes: &[u8], magic: [u8; 4]) -> Result<()> {
    if bytes.len() < 4 {
        return Err(truncated(4, bytes.len()));
    }
    let found: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if found != magic {
        return Err(Error::BadMagic {
            expected: magic,
            found,
        });
    }
    Ok(())
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    check_magic(bytes, TENSOR_MAGIC)?;
    if bytes.len() < FIXED_HEADER {
        return Err(truncated(FIXED_HEADER as u64, bytes.len()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != TENSOR_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = Dtype::from_code(bytes[8])?;
    let ndim = bytes[9] as usize;
    let header = FIXED_HEADER + 8 * ndim;
    if bytes.len() < header {
        return Err(truncated(header as u64, bytes.len()));
    }
    let dims: Vec<u64> = bytes[FIXED_HEADER..header]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let n = numel(&dims)?;
    let expected = n
        .checked_mul(dtype.size() as u64)
        .and_then(|p| p.checked_add(header as u64))
        .ok_or_else(|| Error::ShapeMismatch(format!("payload size of {dims:?} overflows")))?;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(truncated(expected, bytes.len()));
    }
    if found > expected {
        return Err(Error::TrailingBytes(found - expected));
    }
    let payload = &bytes[header..];
    let data = match dtype {
        Dtype::F32 => {
            let v: Vec<f32> = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            if let Some(index) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteValue { index });
            }
            TensorData::F32(v)
        }
        Dtype::I64 => TensorData::I64(
            payload
                .chunks_exact(8)
                .map(|c| i64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
        ),
    };
    Ok(Tensor { dims, data })
}

pub fn write_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_tensor(tensor)).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes)
}

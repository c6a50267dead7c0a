use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least 2 samples to estimate statistics, got {rows}")]
    FewerThanTwoSamples { rows: usize },

    #[error("non-finite value in input at flat index {index}")]
    NonFiniteInput { index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is indefinite: eigenvalue {min_eigenvalue:e} below clamp threshold (max eigenvalue {max_eigenvalue:e})")]
    IndefiniteMatrix {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("zero vector where a direction is required")]
    ZeroVector,

    #[error("expected a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("score batch is empty")]
    EmptyBatch,

    #[error("input has no rows")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bad magic bytes {found:?} (expected {expected:?})")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),

    #[error("truncated file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: u64, found: u64 },

    #[error("{0} trailing bytes after payload")]
    TrailingBytes(u64),

    #[error("non-finite value in payload at element {index}")]
    NonFiniteValue { index: usize },

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),

    #[error("invalid word offsets: {0}")]
    OffsetsInvalid(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable name of the error class, printed by the CLI and mapped to
    /// status codes by the C bindings.
    pub fn class(&self) -> &'static str {
        match self {
            Error::FewerThanTwoSamples { .. } => "FewerThanTwoSamples",
            Error::NonFiniteInput { .. } => "NonFiniteInput",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::IndefiniteMatrix { .. } => "IndefiniteMatrix",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::ZeroVector => "ZeroVector",
            Error::NonSquare { .. } => "NonSquare",
            Error::EmptyBatch => "EmptyBatch",
            Error::EmptyInput => "EmptyInput",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::BadMagic { .. } => "BadMagic",
            Error::UnsupportedVersion(_) => "UnsupportedVersion",
            Error::UnsupportedDtype(_) => "UnsupportedDtype",
            Error::TruncatedFile { .. } => "TruncatedFile",
            Error::TrailingBytes(_) => "TrailingBytes",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::MissingFile(_) => "MissingFile",
            Error::ManifestMismatch(_) => "ManifestMismatch",
            Error::OffsetsInvalid(_) => "OffsetsInvalid",
            Error::Io { .. } => "IoFailure",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}

pub(crate) fn ensure_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteInput { index }),
        None => Ok(()),
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("image codec error: {0}")]
    Codec(String),

    #[error("image has zero width or height")]
    EmptyImage,

    #[error("buffer of length {len} does not match {rows}x{cols}")]
    BufferSize { len: usize, rows: usize, cols: usize },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("odd dimension {rows}x{cols}; Haar step needs even rows and columns")]
    OddDimension { rows: usize, cols: usize },

    #[error("level must be at least 1")]
    ZeroLevel,

    #[error("level {level} exceeds the maximum {max} for a {width}x{height} image")]
    LevelTooHigh {
        level: u32,
        max: u32,
        width: usize,
        height: usize,
    },

    #[error("malformed packet: {0}")]
    MalformedPacket(String),

    #[error("invalid packet path: {0}")]
    InvalidPath(String),

    #[error("bad container magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("truncated container: expected {expected} bytes, found {found}")]
    TruncatedContainer { expected: usize, found: usize },

    #[error("inconsistent container: {0}")]
    InconsistentContainer(String),

    #[error("empty sub-band")]
    EmptyBand,

    #[error("invalid binarization window {0}; must be odd and at least 3")]
    InvalidWindow(usize),

    #[error("invalid blur spec: {0}")]
    InvalidBlurSpec(String),

    #[error("kernel of size {size} does not fit a {width}x{height} image")]
    KernelTooLarge {
        size: usize,
        width: usize,
        height: usize,
    },

    #[error("image too small for this operation: {width}x{height}")]
    ImageTooSmall { width: usize, height: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variant names are stable; the CLI prints them verbatim as the `kind`
/// field of its error record.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported image depth or format: {0}")]
    UnsupportedDepth(String),
    #[error("invalid raster: {0}")]
    InvalidImage(String),

    #[error("invalid eye pair: {0}")]
    InvalidEyes(String),
    #[error("degenerate eye pair: inter-eye distance {0} is below 1 pixel")]
    DegenerateEyes(f64),
    #[error("invalid alignment spec: {0}")]
    InvalidAlignment(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("invalid gabor parameters: {0}")]
    InvalidGaborParams(String),
    #[error("value {value} out of range: {what}")]
    OutOfRange { what: &'static str, value: i64 },

    #[error("invalid phase code image: {0}")]
    InvalidCodes(String),
    #[error("invalid match parameters: {0}")]
    InvalidMatchParams(String),
    #[error("block {block_h}x{block_w} is larger than image {height}x{width}")]
    BlockLargerThanImage {
        block_h: usize,
        block_w: usize,
        height: usize,
        width: usize,
    },
    #[error("patch at {origin:?} leaves the {height}x{width} image")]
    PatchOutOfBounds {
        origin: (usize, usize),
        height: usize,
        width: usize,
    },
    #[error("channel mismatch: {0} vs {1}")]
    ChannelMismatch(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("too few candidates for slope fit: {0} < 2")]
    TooFewCandidates(usize),

    #[error("duplicate gallery entry ({identity}, {image_id})")]
    DuplicateEntry { identity: String, image_id: String },
    #[error("gallery build failed for {}", failures.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>().join(", "))]
    Build { failures: Vec<(String, Error)> },
    #[error("missing eye record for image {0:?}")]
    MissingEyes(String),
    #[error("bad magic: not a gallery index file")]
    BadMagic,
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("index file truncated: {0}")]
    TruncatedFile(String),
    #[error("index checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("index field does not fit the file format: {0}")]
    FieldOverflow(String),
    #[error("probe parameters differ from the gallery index parameters")]
    FingerprintMismatch,
    #[error("unknown identity for probes: {}", .0.join(", "))]
    UnknownIdentity(Vec<String>),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable variant name, used for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::FileNotFound(_) => "FileNotFound",
            Error::Io(_) => "IoError",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::UnsupportedDepth(_) => "UnsupportedDepth",
            Error::InvalidImage(_) => "InvalidImage",
            Error::InvalidEyes(_) => "InvalidEyes",
            Error::DegenerateEyes(_) => "DegenerateEyes",
            Error::InvalidAlignment(_) => "InvalidAlignment",
            Error::Parse { .. } => "ParseError",
            Error::DuplicateId { .. } => "DuplicateId",
            Error::InvalidGaborParams(_) => "InvalidGaborParams",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::InvalidCodes(_) => "InvalidCodes",
            Error::InvalidMatchParams(_) => "InvalidMatchParams",
            Error::BlockLargerThanImage { .. } => "BlockLargerThanImage",
            Error::PatchOutOfBounds { .. } => "PatchOutOfBounds",
            Error::ChannelMismatch(..) => "ChannelMismatch",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::TooFewCandidates(_) => "TooFewCandidates",
            Error::DuplicateEntry { .. } => "DuplicateEntry",
            Error::Build { .. } => "BuildFailed",
            Error::MissingEyes(_) => "MissingEyes",
            Error::BadMagic => "BadMagic",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::TruncatedFile(_) => "TruncatedFile",
            Error::ChecksumMismatch { .. } => "ChecksumMismatch",
            Error::FieldOverflow(_) => "FieldOverflow",
            Error::FingerprintMismatch => "FingerprintMismatch",
            Error::UnknownIdentity(_) => "UnknownIdentity",
            Error::Config { .. } => "ConfigError",
            Error::Csv(_) => "CsvError",
        }
    }

    pub(crate) fn io_at(path: &std::path::Path, err: std::io::Error) -> Self {
        if err.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path.to_path_buf())
        } else {
            Error::Io(err)
        }
    }
}

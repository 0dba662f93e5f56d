//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the codec and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector had a different length than the operation required.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Signal length is not divisible by 2^levels.
    #[error("signal length {n} is not divisible by 2^{levels}")]
    NotDyadic { n: usize, levels: usize },

    /// Decomposition depth outside the range the signal length supports.
    #[error("decomposition levels {levels} invalid for length {n} (need 1 <= L and 2^L <= n)")]
    LevelsOutOfRange { n: usize, levels: usize },

    /// Coefficient or sample index outside the valid range.
    #[error("index {index} out of range for length {n}")]
    IndexOutOfRange { index: usize, n: usize },

    /// Requested detail budget exceeds the number of selectable tree nodes.
    #[error("detail budget {k_detail} exceeds the {selectable} selectable tree nodes")]
    DetailBudgetTooLarge { k_detail: usize, selectable: usize },

    /// Exhaustive enumeration refused: the instance is too large.
    #[error("brute-force enumeration limited to {limit} selectable nodes, instance has {selectable}")]
    InstanceTooLarge { selectable: usize, limit: usize },

    /// Least-squares support larger than the number of measurements.
    #[error("support size {support} exceeds {measurements} measurements; shrink the support before solving")]
    SupportTooLarge {
        support: usize,
        measurements: usize,
    },

    /// Invalid measurement-matrix parameters.
    #[error("invalid sensing matrix: {reason}")]
    InvalidMatrix { reason: String },

    /// An operation that needs data received none.
    #[error("empty input: {context}")]
    EmptyInput { context: &'static str },

    /// Reference signal has zero norm, PRD undefined.
    #[error("reference signal has zero norm")]
    ZeroReference,

    /// Reference signal is constant, PRDN undefined.
    #[error("reference signal is constant")]
    ConstantReference,

    /// Bitstream does not start with the expected magic bytes.
    #[error("bad stream magic: expected \"CSEB\"")]
    BadMagic,

    /// Bitstream version is not supported.
    #[error("unsupported stream version {found}")]
    BadVersion { found: u8 },

    /// A checksum did not match.
    #[error("CRC mismatch in {what}")]
    CrcMismatch { what: String },

    /// Stream ended before the expected structure was complete.
    #[error("truncated stream while reading {context}")]
    Truncated { context: String },

    /// Huffman decoder hit an invalid code.
    #[error("invalid Huffman code at bit offset {bit_offset}")]
    HuffmanDecode { bit_offset: usize },

    /// Huffman table construction failed.
    #[error("huffman table: {reason}")]
    HuffmanBuild { reason: String },

    /// Quantizer training or codebook construction failed.
    #[error("quantizer: {reason}")]
    Quantizer { reason: String },

    /// Invalid run or algorithm configuration.
    #[error("configuration error: {reason}")]
    Config { reason: String },

    /// Malformed input data (bad row, NaN sample and similar).
    #[error("data error: {reason}")]
    Data { reason: String },
}

impl Error {
    /// True for errors that indicate a corrupt or unreadable bitstream.
    pub fn is_stream_corruption(&self) -> bool {
        matches!(
            self,
            Error::BadMagic
                | Error::BadVersion { .. }
                | Error::CrcMismatch { .. }
                | Error::Truncated { .. }
                | Error::HuffmanDecode { .. }
        )
    }
}

//! Measurement-stream codec: inter-frame differencing, Lloyd-Max scalar
//! quantization, canonical Huffman coding, and the byte format tying them
//! together.
//!
//! Differencing is closed-loop: every frame after the first is the gap
//! between the incoming measurements and the *dequantized* previous frame,
//! so quantization error never accumulates and the decoder's running
//! reconstruction matches the encoder's bit for bit. Encoding makes three
//! passes — train the codebook on the open-loop difference distribution,
//! quantize closed-loop, then build the Huffman code from the symbols that
//! actually occurred (a symbol unseen in training would otherwise have no
//! code).
//!
//! Stream layout, all integers little-endian: magic `CSEB`, version byte,
//! signal length u32, measurement count u32, wavelet levels u8, sparsity
//! u16, segment count u32, sensing-matrix descriptor, codebook levels
//! (256 × f64), Huffman code lengths (256 × u8), CRC-32 of everything
//! before it; then one frame per segment as {payload bits u32, payload
//! bytes, CRC-32 of the length prefix plus payload}. Frames are
//! byte-aligned; the bit count recovers the exact payload end.

pub mod crc;
pub mod huffman;
pub mod quantizer;

pub use huffman::HuffmanTable;
pub use quantizer::Codebook;

use crate::error::{Error, Result};
use crate::sensing::{SensingMatrix, DESCRIPTOR_LEN};
use crate::wavelet;
use huffman::ALPHABET;
use quantizer::CODEBOOK_LEN;

const MAGIC: &[u8; 4] = b"CSEB";
const VERSION: u8 = 1;
const MAX_TRAIN_ITERATIONS: usize = 500;
const TRAIN_TOL: f64 = 1e-9;

/// Serialized header size: fixed fields, matrix descriptor, codebook,
/// Huffman lengths, checksum.
pub const HEADER_LEN: usize = 20 + DESCRIPTOR_LEN + 8 * CODEBOOK_LEN + ALPHABET + 4;

/// Everything the decoder needs besides the frames themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    /// Samples per segment before sensing.
    pub n: u32,
    /// Measurements per segment.
    pub m: u32,
    /// Wavelet decomposition depth used at recovery.
    pub levels: u8,
    /// Coefficient budget used at recovery.
    pub k_total: u16,
    pub matrix_descriptor: [u8; DESCRIPTOR_LEN],
    pub codebook: Codebook,
    pub huffman: HuffmanTable,
}

impl StreamHeader {
    /// Regenerates the sensing matrix and checks it against the header's
    /// own dimension fields.
    pub fn sensing_matrix(&self) -> Result<SensingMatrix> {
        let phi = SensingMatrix::from_descriptor(&self.matrix_descriptor)?;
        if phi.m() != self.m as usize || phi.n() != self.n as usize {
            return Err(Error::Data {
                reason: format!(
                    "matrix descriptor is {}x{} but the header says {}x{}",
                    phi.m(),
                    phi.n(),
                    self.m,
                    self.n
                ),
            });
        }
        Ok(phi)
    }

    fn write_to(&self, out: &mut Vec<u8>, segment_count: u32) {
        let start = out.len();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.push(self.levels);
        out.extend_from_slice(&self.k_total.to_le_bytes());
        out.extend_from_slice(&segment_count.to_le_bytes());
        out.extend_from_slice(&self.matrix_descriptor);
        for level in self.codebook.to_levels() {
            out.extend_from_slice(&level.to_le_bytes());
        }
        out.extend_from_slice(self.huffman.lengths());
        let checksum = crc::crc32(&out[start..]);
        out.extend_from_slice(&checksum.to_le_bytes());
    }
}

/// One entropy-coded segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub payload: Vec<u8>,
    /// Exact bit count; the payload's final byte may carry padding bits.
    pub payload_bits: u32,
}

/// A parsed stream: header plus frames, losslessly serializable.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedStream {
    pub header: StreamHeader,
    pub frames: Vec<Frame>,
}

impl EncodedStream {
    pub fn serialized_len(&self) -> usize {
        HEADER_LEN + self.frames.iter().map(|f| 8 + f.payload.len()).sum::<usize>()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let count = u32::try_from(self.frames.len()).expect("frame count fits u32");
        let mut out = Vec::with_capacity(self.serialized_len());
        self.header.write_to(&mut out, count);
        for frame in &self.frames {
            let start = out.len();
            out.extend_from_slice(&frame.payload_bits.to_le_bytes());
            out.extend_from_slice(&frame.payload);
            let checksum = crc::crc32(&out[start..]);
            out.extend_from_slice(&checksum.to_le_bytes());
        }
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic")? != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = r.u8("version")?;
        if version != VERSION {
            return Err(Error::BadVersion { found: version });
        }
        let n = r.u32("signal length")?;
        let m = r.u32("measurement count")?;
        let levels = r.u8("wavelet levels")?;
        let k_total = r.u16("sparsity")?;
        let segment_count = r.u32("segment count")?;
        let mut matrix_descriptor = [0u8; DESCRIPTOR_LEN];
        matrix_descriptor.copy_from_slice(r.take(DESCRIPTOR_LEN, "matrix descriptor")?);
        let mut raw_levels = [0.0f64; CODEBOOK_LEN];
        for v in raw_levels.iter_mut() {
            *v = f64::from_le_bytes(r.take(8, "codebook")?.try_into().unwrap());
        }
        let mut lengths = [0u8; ALPHABET];
        lengths.copy_from_slice(r.take(ALPHABET, "huffman lengths")?);
        let stored = r.u32("header checksum")?;
        if stored != crc::crc32(&bytes[..r.pos - 4]) {
            return Err(Error::CrcMismatch {
                what: "header".into(),
            });
        }
        // Semantic parsing only after the checksum vouches for the bytes.
        let codebook = Codebook::from_levels(&raw_levels)?;
        let huffman = HuffmanTable::from_lengths(&lengths)?;
        let header = StreamHeader {
            n,
            m,
            levels,
            k_total,
            matrix_descriptor,
            codebook,
            huffman,
        };

        let cap = (segment_count as usize).min(bytes.len() / 8);
        let mut frames = Vec::with_capacity(cap);
        for i in 0..segment_count {
            // Truncation inside a frame reports which frame it hit.
            let name_frame = |e: Error| match e {
                Error::Truncated { context } => Error::Truncated {
                    context: format!("frame {i} {context}"),
                },
                other => other,
            };
            let frame_start = r.pos;
            let payload_bits = r.u32("length").map_err(name_frame)?;
            let payload = r
                .take((payload_bits as usize).div_ceil(8), "payload")
                .map_err(name_frame)?
                .to_vec();
            let stored = r.u32("checksum").map_err(name_frame)?;
            if stored != crc::crc32(&bytes[frame_start..r.pos - 4]) {
                return Err(Error::CrcMismatch {
                    what: format!("frame {i}"),
                });
            }
            frames.push(Frame {
                payload,
                payload_bits,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Data {
                reason: format!("{} trailing bytes after the final frame", bytes.len() - r.pos),
            });
        }
        Ok(Self { header, frames })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, context: &'static str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < len {
            return Err(Error::Truncated {
                context: context.into(),
            });
        }
        let slice = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(slice)
    }

    fn u8(&mut self, context: &'static str) -> Result<u8> {
        Ok(self.take(1, context)?[0])
    }

    fn u16(&mut self, context: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, context)?.try_into().unwrap()))
    }

    fn u32(&mut self, context: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, context)?.try_into().unwrap()))
    }
}

/// Difference against the previous reconstruction; the first frame passes
/// through unchanged.
pub fn diff_encode(y: &[f64], prev_reconstructed: Option<&[f64]>) -> Result<Vec<f64>> {
    match prev_reconstructed {
        None => Ok(y.to_vec()),
        Some(prev) if prev.len() == y.len() => {
            Ok(y.iter().zip(prev).map(|(a, b)| a - b).collect())
        }
        Some(prev) => Err(Error::DimensionMismatch {
            context: "difference frame",
            expected: y.len(),
            actual: prev.len(),
        }),
    }
}

/// Advances the running reconstruction by one dequantized frame. Encoder
/// and decoder both step through this exact function, which is what makes
/// their reconstructions bit-identical.
fn accumulate(prev: Option<&[f64]>, symbols: &[u8], codebook: &Codebook) -> Vec<f64> {
    match prev {
        None => symbols.iter().map(|&s| codebook.dequantize(s)).collect(),
        Some(prev) => symbols
            .iter()
            .zip(prev)
            .map(|(&s, &v)| v + codebook.dequantize(s))
            .collect(),
    }
}

/// Encoder-side byproducts: rate accounting and the closed-loop
/// reconstructions the decoder will reproduce exactly.
#[derive(Debug, Clone)]
pub struct EncodeStats {
    pub header_bits: usize,
    /// Exact Huffman bits per frame, excluding framing overhead.
    pub payload_bits: Vec<usize>,
    /// Full serialized stream size in bits, header and framing included.
    pub stream_bits: usize,
    pub entropy_bits_per_symbol: f64,
    pub mean_code_bits_per_symbol: f64,
    pub quantizer_collapsed: bool,
    pub training_mse: Vec<f64>,
    pub reconstructions: Vec<Vec<f64>>,
}

/// Compresses a run of measurement segments into a stream.
pub fn encode_segments(
    phi: &SensingMatrix,
    levels: usize,
    k_total: usize,
    segments: &[Vec<f64>],
) -> Result<(EncodedStream, EncodeStats)> {
    if segments.is_empty() {
        return Err(Error::EmptyInput {
            context: "measurement segments",
        });
    }
    let m = phi.m();
    wavelet::validate_dims(phi.n(), levels)?;
    if k_total == 0 || k_total > phi.n() || k_total > u16::MAX as usize {
        return Err(Error::Config {
            reason: format!("sparsity {k_total} outside 1..={}", phi.n().min(u16::MAX as usize)),
        });
    }
    if segments.len() > u32::MAX as usize {
        return Err(Error::Config {
            reason: "segment count exceeds the format's u32 field".into(),
        });
    }
    for (t, y) in segments.iter().enumerate() {
        if y.len() != m {
            return Err(Error::DimensionMismatch {
                context: "measurement segment",
                expected: m,
                actual: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data {
                reason: format!("segment {t} contains non-finite measurements"),
            });
        }
    }

    // Pass 1: codebook from the open-loop difference distribution (the
    // closed-loop differences don't exist until a codebook does).
    let mut train = Vec::with_capacity(segments.len() * m);
    train.extend_from_slice(&segments[0]);
    for pair in segments.windows(2) {
        train.extend(pair[1].iter().zip(&pair[0]).map(|(a, b)| a - b));
    }
    let (codebook, trace) = Codebook::train(&train, CODEBOOK_LEN, MAX_TRAIN_ITERATIONS, TRAIN_TOL)?;

    // Pass 2: closed-loop quantization.
    let mut histogram = [0u64; ALPHABET];
    let mut symbol_frames = Vec::with_capacity(segments.len());
    let mut reconstructions: Vec<Vec<f64>> = Vec::with_capacity(segments.len());
    for y in segments {
        let prev = reconstructions.last().map(Vec::as_slice);
        let diff = diff_encode(y, prev)?;
        let symbols: Vec<u8> = diff.iter().map(|&v| codebook.quantize(v)).collect();
        for &s in &symbols {
            histogram[s as usize] += 1;
        }
        reconstructions.push(accumulate(prev, &symbols, &codebook));
        symbol_frames.push(symbols);
    }

    // Pass 3: entropy code over the symbols that actually occurred.
    let table = HuffmanTable::from_histogram(&histogram)?;
    let mut frames = Vec::with_capacity(segments.len());
    let mut payload_bits = Vec::with_capacity(segments.len());
    for symbols in &symbol_frames {
        let (payload, bits) = huffman::encode(symbols, &table)?;
        if bits > u32::MAX as usize {
            return Err(Error::Data {
                reason: "frame payload exceeds the format's u32 bit count".into(),
            });
        }
        payload_bits.push(bits);
        frames.push(Frame {
            payload,
            payload_bits: bits as u32,
        });
    }

    let header = StreamHeader {
        n: phi.n() as u32,
        m: m as u32,
        levels: levels as u8,
        k_total: k_total as u16,
        matrix_descriptor: phi.to_descriptor(),
        codebook,
        huffman: table,
    };
    let stream = EncodedStream { header, frames };
    let stats = EncodeStats {
        header_bits: HEADER_LEN * 8,
        payload_bits,
        stream_bits: stream.serialized_len() * 8,
        entropy_bits_per_symbol: huffman::entropy(&histogram),
        mean_code_bits_per_symbol: stream.header.huffman.mean_length(&histogram),
        quantizer_collapsed: stream.header.codebook.is_collapsed(),
        training_mse: trace.mse,
        reconstructions,
    };
    Ok((stream, stats))
}

/// Parses a stream and rebuilds the dequantized measurement segments.
pub fn decode_segments(bytes: &[u8]) -> Result<(EncodedStream, Vec<Vec<f64>>)> {
    let stream = EncodedStream::deserialize(bytes)?;
    let m = stream.header.m as usize;
    let mut segments = Vec::with_capacity(stream.frames.len());
    for frame in &stream.frames {
        let symbols = huffman::decode(
            &frame.payload,
            frame.payload_bits as usize,
            &stream.header.huffman,
            m,
        )?;
        let prev = segments.last().map(Vec::as_slice);
        segments.push(accumulate(prev, &symbols, &stream.header.codebook));
    }
    Ok((stream, segments))
}

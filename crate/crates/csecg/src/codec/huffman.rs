//! Canonical Huffman coding over the 256-symbol quantizer alphabet.
//!
//! Only code lengths travel in the stream header; both ends rebuild the same
//! codes from them (shorter codes first, ties by symbol value, each code one
//! more than the previous shifted to its length). A degenerate one-symbol
//! alphabet gets a single 1-bit code so every symbol still occupies at least
//! one bit and frames stay self-delimiting.

use crate::error::{Error, Result};

/// Alphabet size: one symbol per quantizer level.
pub const ALPHABET: usize = 256;

/// Longest admissible code. Keeps codes in a `u64` with room to spare;
/// reachable only by adversarially contrived histograms.
const MAX_CODE_LEN: usize = 57;

/// Canonical code table: lengths are authoritative, codes derived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTable {
    lengths: [u8; ALPHABET],
    codes: [u64; ALPHABET],
    /// Symbols sorted canonically (length, then value), decode side.
    canonical_symbols: Vec<u8>,
    /// Per length: first canonical code and index into `canonical_symbols`.
    first_code: [u64; MAX_CODE_LEN + 1],
    first_index: [usize; MAX_CODE_LEN + 1],
    count: [usize; MAX_CODE_LEN + 1],
}

impl HuffmanTable {
    /// Builds the optimal code for a symbol histogram.
    pub fn from_histogram(histogram: &[u64; ALPHABET]) -> Result<Self> {
        let mut lengths = [0u8; ALPHABET];
        let present: Vec<usize> = (0..ALPHABET).filter(|&s| histogram[s] > 0).collect();
        match present.len() {
            0 => {
                return Err(Error::EmptyInput {
                    context: "symbol histogram",
                })
            }
            1 => lengths[present[0]] = 1,
            _ => {
                // Pairwise merging on (weight, creation order): leaves enter
                // in symbol order, internal nodes in creation order, so ties
                // resolve identically everywhere.
                #[derive(PartialEq, Eq, PartialOrd, Ord)]
                struct Node {
                    weight: u64,
                    order: usize,
                }
                let mut heap = std::collections::BinaryHeap::new();
                let mut parent: Vec<Option<usize>> = vec![None; present.len()];
                for (i, &s) in present.iter().enumerate() {
                    heap.push(std::cmp::Reverse((
                        Node {
                            weight: histogram[s],
                            order: i,
                        },
                        i,
                    )));
                }
                let mut next = present.len();
                while heap.len() > 1 {
                    let std::cmp::Reverse((a, ai)) = heap.pop().unwrap();
                    let std::cmp::Reverse((b, bi)) = heap.pop().unwrap();
                    parent.push(None);
                    parent[ai] = Some(next);
                    parent[bi] = Some(next);
                    heap.push(std::cmp::Reverse((
                        Node {
                            weight: a.weight + b.weight,
                            order: next,
                        },
                        next,
                    )));
                    next += 1;
                }
                for (i, &s) in present.iter().enumerate() {
                    let mut depth = 0usize;
                    let mut at = i;
                    while let Some(p) = parent[at] {
                        depth += 1;
                        at = p;
                    }
                    if depth > MAX_CODE_LEN {
                        return Err(Error::HuffmanBuild {
                            reason: format!("code length {depth} exceeds {MAX_CODE_LEN}"),
                        });
                    }
                    lengths[s] = depth as u8;
                }
            }
        }
        Self::from_lengths(&lengths)
    }

    /// Rebuilds the canonical codes from a length table (the header form).
    pub fn from_lengths(lengths: &[u8; ALPHABET]) -> Result<Self> {
        let mut canonical_symbols: Vec<u8> = (0u16..ALPHABET as u16)
            .map(|s| s as u8)
            .filter(|&s| lengths[s as usize] > 0)
            .collect();
        if canonical_symbols.is_empty() {
            return Err(Error::EmptyInput {
                context: "huffman length table",
            });
        }
        canonical_symbols.sort_by_key(|&s| (lengths[s as usize], s));
        let mut count = [0usize; MAX_CODE_LEN + 1];
        for &s in &canonical_symbols {
            let l = lengths[s as usize] as usize;
            if l > MAX_CODE_LEN {
                return Err(Error::HuffmanBuild {
                    reason: format!("code length {l} exceeds {MAX_CODE_LEN}"),
                });
            }
            count[l] += 1;
        }
        // Kraft sum must not overflow the code space (incomplete codes are
        // fine: the degenerate one-symbol table uses half the space).
        let mut kraft = 0u128;
        for (l, &c) in count.iter().enumerate().skip(1) {
            kraft += (c as u128) << (MAX_CODE_LEN + 1 - l);
        }
        if kraft > 1u128 << (MAX_CODE_LEN + 1) {
            return Err(Error::HuffmanBuild {
                reason: "length table oversubscribes the code space".into(),
            });
        }
        let mut codes = [0u64; ALPHABET];
        let mut first_code = [0u64; MAX_CODE_LEN + 1];
        let mut first_index = [0usize; MAX_CODE_LEN + 1];
        let mut code = 0u64;
        let mut index = 0usize;
        for l in 1..=MAX_CODE_LEN {
            code <<= 1;
            first_code[l] = code;
            first_index[l] = index;
            for _ in 0..count[l] {
                codes[canonical_symbols[index] as usize] = code;
                code += 1;
                index += 1;
            }
        }
        Ok(Self {
            lengths: *lengths,
            codes,
            canonical_symbols,
            first_code,
            first_index,
            count,
        })
    }

    pub fn lengths(&self) -> &[u8; ALPHABET] {
        &self.lengths
    }

    pub fn code_of(&self, symbol: u8) -> Option<(u64, u8)> {
        let l = self.lengths[symbol as usize];
        (l > 0).then(|| (self.codes[symbol as usize], l))
    }

    /// Bits needed for a symbol sequence under this table.
    pub fn encoded_bits(&self, symbols: &[u8]) -> Result<usize> {
        let mut bits = 0usize;
        for &s in symbols {
            let l = self.lengths[s as usize] as usize;
            if l == 0 {
                return Err(Error::HuffmanBuild {
                    reason: format!("symbol {s} has no code"),
                });
            }
            bits += l;
        }
        Ok(bits)
    }

    /// Mean code length in bits per symbol under a histogram.
    pub fn mean_length(&self, histogram: &[u64; ALPHABET]) -> f64 {
        let total: u64 = histogram.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let weighted: u64 = histogram
            .iter()
            .enumerate()
            .map(|(s, &c)| c * self.lengths[s] as u64)
            .sum();
        weighted as f64 / total as f64
    }
}

/// Empirical entropy of a histogram in bits per symbol.
pub fn entropy(histogram: &[u64; ALPHABET]) -> f64 {
    let total: u64 = histogram.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    histogram
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// MSB-first bit accumulator for frame payloads.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_code(&mut self, code: u64, len: u8) {
        for i in (0..len).rev() {
            let bit = (code >> i) & 1;
            if self.bit_len.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if bit == 1 {
                *self.bytes.last_mut().unwrap() |= 1 << (7 - self.bit_len % 8);
            }
            self.bit_len += 1;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    pub fn into_bytes(self) -> (Vec<u8>, usize) {
        (self.bytes, self.bit_len)
    }
}

/// Encodes a symbol sequence; returns the payload bytes and exact bit count.
pub fn encode(symbols: &[u8], table: &HuffmanTable) -> Result<(Vec<u8>, usize)> {
    let mut w = BitWriter::new();
    for &s in symbols {
        let (code, len) = table.code_of(s).ok_or_else(|| Error::HuffmanBuild {
            reason: format!("symbol {s} has no code"),
        })?;
        w.push_code(code, len);
    }
    Ok(w.into_bytes())
}

/// Decodes exactly `expected` symbols from a payload of `bit_len` bits.
/// The payload must contain no leftover bits beyond byte padding.
pub fn decode(
    bytes: &[u8],
    bit_len: usize,
    table: &HuffmanTable,
    expected: usize,
) -> Result<Vec<u8>> {
    if bit_len > bytes.len() * 8 {
        return Err(Error::Truncated {
            context: "huffman payload".into(),
        });
    }
    let mut out = Vec::with_capacity(expected);
    let mut code = 0u64;
    let mut len = 0usize;
    let mut pos = 0usize;
    while out.len() < expected {
        if pos >= bit_len {
            return Err(Error::HuffmanDecode { bit_offset: pos });
        }
        let bit = (bytes[pos / 8] >> (7 - pos % 8)) & 1;
        pos += 1;
        code = code << 1 | bit as u64;
        len += 1;
        if len > MAX_CODE_LEN {
            return Err(Error::HuffmanDecode { bit_offset: pos });
        }
        let offset = code.wrapping_sub(table.first_code[len]);
        if table.count[len] > 0 && code >= table.first_code[len] && (offset as usize) < table.count[len] {
            out.push(table.canonical_symbols[table.first_index[len] + offset as usize]);
            code = 0;
            len = 0;
        }
    }
    if pos != bit_len {
        return Err(Error::HuffmanDecode { bit_offset: pos });
    }
    Ok(out)
}

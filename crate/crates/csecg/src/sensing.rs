//! Seeded random measurement matrices and the combined measure-then-transform
//! operator.
//!
//! A matrix is never stored in the bitstream; only a 21-byte descriptor
//! (kind, dimensions, column weight, seed) travels with the data and both
//! ends regenerate the matrix from it. That makes the draw order part of the
//! format contract:
//!
//! - the generator is ChaCha20 seeded with the descriptor's `seed` via
//!   `seed_from_u64`,
//! - entries are drawn column by column, rows in ascending order within a
//!   column,
//! - a sign is the low bit of `next_u32` (1 bit set → positive),
//! - a sparse column picks its `q` distinct rows by repeated
//!   `next_u32 % m`, discarding duplicates, then sorts them ascending and
//!   draws per-entry signs (signed kind only) in that sorted order.
//!
//! Three kinds are supported: dense Bernoulli `±1/√m`, sparse binary with
//! `q` entries of `1/√q` per column, and its signed variant with entries
//! `±1/√q`. The sparse kinds cut encoder work from `m·n` to `q·n`
//! multiply-adds per segment.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::par;
use crate::wavelet::{self, WaveletCoeffs};

/// Serialized descriptor length in bytes.
pub const DESCRIPTOR_LEN: usize = 21;

/// Materialize the combined operator as a dense matrix up to this many
/// entries (32 MiB of f64); larger operators stay lazy.
const DENSE_LIMIT_ENTRIES: usize = 1 << 22;

/// Measurement matrix family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// Every entry is `±1/√m`.
    DenseBernoulli,
    /// `q` entries of `1/√q` per column, rest zero.
    SparseBinary,
    /// `q` entries of `±1/√q` per column, rest zero.
    SparseSigned,
}

impl MatrixKind {
    pub fn code(self) -> u8 {
        match self {
            MatrixKind::DenseBernoulli => 0,
            MatrixKind::SparseBinary => 1,
            MatrixKind::SparseSigned => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(MatrixKind::DenseBernoulli),
            1 => Ok(MatrixKind::SparseBinary),
            2 => Ok(MatrixKind::SparseSigned),
            other => Err(Error::InvalidMatrix {
                reason: format!("unknown matrix kind code {other}"),
            }),
        }
    }

    pub fn is_sparse(self) -> bool {
        !matches!(self, MatrixKind::DenseBernoulli)
    }
}

#[derive(Debug, Clone)]
enum Storage {
    /// Column-major `m × n`.
    Dense(Vec<f64>),
    /// `q` (row, value) entries per column, rows ascending within a column.
    Sparse { rows: Vec<usize>, values: Vec<f64> },
}

/// A regenerable random measurement matrix.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    kind: MatrixKind,
    m: usize,
    n: usize,
    q: usize,
    seed: u64,
    storage: Storage,
}

impl SensingMatrix {
    /// Draws the matrix for `(kind, m, n, q, seed)`. Dense matrices take
    /// `q = 0`; sparse ones need `1 <= q <= m`.
    pub fn generate(kind: MatrixKind, m: usize, n: usize, q: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::EmptyInput {
                context: "sensing matrix dimensions",
            });
        }
        if m > u32::MAX as usize || n > u32::MAX as usize {
            return Err(Error::InvalidMatrix {
                reason: format!("dimensions {m}x{n} exceed the descriptor's u32 fields"),
            });
        }
        match kind {
            MatrixKind::DenseBernoulli => {
                if q != 0 {
                    return Err(Error::InvalidMatrix {
                        reason: format!("dense kind carries q = 0, got {q}"),
                    });
                }
            }
            _ => {
                if q == 0 || q > m {
                    return Err(Error::InvalidMatrix {
                        reason: format!("column weight {q} outside 1..={m}"),
                    });
                }
            }
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let storage = match kind {
            MatrixKind::DenseBernoulli => {
                let amp = 1.0 / (m as f64).sqrt();
                let mut cols = vec![0.0; m * n];
                for j in 0..n {
                    for i in 0..m {
                        let sign = if rng.next_u32() & 1 == 1 { amp } else { -amp };
                        cols[j * m + i] = sign;
                    }
                }
                Storage::Dense(cols)
            }
            MatrixKind::SparseBinary | MatrixKind::SparseSigned => {
                let amp = 1.0 / (q as f64).sqrt();
                let mut rows = Vec::with_capacity(n * q);
                let mut values = Vec::with_capacity(n * q);
                let mut picked: Vec<usize> = Vec::with_capacity(q);
                for _ in 0..n {
                    picked.clear();
                    while picked.len() < q {
                        let r = rng.next_u32() as usize % m;
                        if !picked.contains(&r) {
                            picked.push(r);
                        }
                    }
                    picked.sort_unstable();
                    for &row in &picked {
                        let v = if kind == MatrixKind::SparseBinary || rng.next_u32() & 1 == 1 {
                            amp
                        } else {
                            -amp
                        };
                        rows.push(row);
                        values.push(v);
                    }
                }
                Storage::Sparse { rows, values }
            }
        };
        Ok(Self {
            kind,
            m,
            n,
            q,
            seed,
            storage,
        })
    }

    /// Column weight used throughout: 2.5 % of the signal length, rounded
    /// down.
    pub fn default_nonzeros_per_column(n: usize) -> usize {
        n / 40
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    /// Number of measurements (rows).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Signal length (columns).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Nonzeros per column; 0 for the dense kind.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `y = Φ x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "measurement input",
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut y = vec![0.0; self.m];
        match &self.storage {
            Storage::Dense(cols) => {
                for (j, &xj) in x.iter().enumerate() {
                    if xj == 0.0 {
                        continue;
                    }
                    let col = &cols[j * self.m..(j + 1) * self.m];
                    for (yi, &c) in y.iter_mut().zip(col) {
                        *yi += c * xj;
                    }
                }
            }
            Storage::Sparse { rows, values } => {
                for (j, &xj) in x.iter().enumerate() {
                    if xj == 0.0 {
                        continue;
                    }
                    for e in j * self.q..(j + 1) * self.q {
                        y[rows[e]] += values[e] * xj;
                    }
                }
            }
        }
        Ok(y)
    }

    /// `Φᵀ r`.
    pub fn apply_transpose(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.m {
            return Err(Error::DimensionMismatch {
                context: "measurement-domain input",
                expected: self.m,
                actual: r.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        match &self.storage {
            Storage::Dense(cols) => {
                for (j, oj) in out.iter_mut().enumerate() {
                    let col = &cols[j * self.m..(j + 1) * self.m];
                    *oj = col.iter().zip(r).map(|(&c, &ri)| c * ri).sum();
                }
            }
            Storage::Sparse { rows, values } => {
                for (j, oj) in out.iter_mut().enumerate() {
                    *oj = (j * self.q..(j + 1) * self.q)
                        .map(|e| values[e] * r[rows[e]])
                        .sum();
                }
            }
        }
        Ok(out)
    }

    /// Column `j` as a dense length-`m` vector.
    pub fn column(&self, j: usize) -> Result<Vec<f64>> {
        if j >= self.n {
            return Err(Error::IndexOutOfRange {
                index: j,
                n: self.n,
            });
        }
        match &self.storage {
            Storage::Dense(cols) => Ok(cols[j * self.m..(j + 1) * self.m].to_vec()),
            Storage::Sparse { rows, values } => {
                let mut col = vec![0.0; self.m];
                for e in j * self.q..(j + 1) * self.q {
                    col[rows[e]] = values[e];
                }
                Ok(col)
            }
        }
    }

    /// Packs `(kind, m, n, q, seed)` as 21 little-endian bytes.
    pub fn to_descriptor(&self) -> [u8; DESCRIPTOR_LEN] {
        let mut d = [0u8; DESCRIPTOR_LEN];
        d[0] = self.kind.code();
        d[1..5].copy_from_slice(&(self.m as u32).to_le_bytes());
        d[5..9].copy_from_slice(&(self.n as u32).to_le_bytes());
        d[9..13].copy_from_slice(&(self.q as u32).to_le_bytes());
        d[13..21].copy_from_slice(&self.seed.to_le_bytes());
        d
    }

    /// Regenerates the matrix a descriptor refers to.
    pub fn from_descriptor(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != DESCRIPTOR_LEN {
            return Err(Error::Truncated {
                context: "matrix descriptor".into(),
            });
        }
        let kind = MatrixKind::from_code(bytes[0])?;
        let m = u32::from_le_bytes(bytes[1..5].try_into().unwrap()) as usize;
        let n = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let q = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let seed = u64::from_le_bytes(bytes[13..21].try_into().unwrap());
        Self::generate(kind, m, n, q, seed)
    }
}

/// The operator taking wavelet coefficients to measurements: measure the
/// synthesized signal, `Θ s = Φ (Ψ s)`.
///
/// Small operators are materialized column by column (in parallel when the
/// `parallel` feature is on) so the recovery loops run as plain dense
/// matvecs; large ones stay lazy and route every application through the
/// transform. Both paths agree to roundoff.
#[derive(Debug, Clone)]
pub struct Theta {
    phi: SensingMatrix,
    levels: usize,
    /// Column-major `m × n` when materialized.
    dense: Option<Vec<f64>>,
}

impl Theta {
    /// Builds the operator, materializing when `m · n` is small enough.
    pub fn new(phi: SensingMatrix, levels: usize) -> Result<Self> {
        if phi.m() * phi.n() <= DENSE_LIMIT_ENTRIES {
            Self::materialized(phi, levels)
        } else {
            Self::lazy(phi, levels)
        }
    }

    /// Builds the operator with its dense form precomputed.
    pub fn materialized(phi: SensingMatrix, levels: usize) -> Result<Self> {
        let mut theta = Self::lazy(phi, levels)?;
        let (m, n) = (theta.phi.m(), theta.phi.n());
        let cols = par::map_indexed(n, |j| {
            let psi_j = wavelet::synthesis_column(j, n, levels).expect("validated dims");
            theta.phi.apply(&psi_j).expect("validated dims")
        });
        let mut dense = vec![0.0; m * n];
        for (j, col) in cols.into_iter().enumerate() {
            dense[j * m..(j + 1) * m].copy_from_slice(&col);
        }
        theta.dense = Some(dense);
        Ok(theta)
    }

    /// Builds the operator without a dense form; every call goes through the
    /// wavelet transform.
    pub fn lazy(phi: SensingMatrix, levels: usize) -> Result<Self> {
        wavelet::validate_dims(phi.n(), levels)?;
        Ok(Self {
            phi,
            levels,
            dense: None,
        })
    }

    pub fn phi(&self) -> &SensingMatrix {
        &self.phi
    }

    pub fn m(&self) -> usize {
        self.phi.m()
    }

    pub fn n(&self) -> usize {
        self.phi.n()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn is_materialized(&self) -> bool {
        self.dense.is_some()
    }

    /// `Θ s` for a coefficient vector `s` of length `n`.
    pub fn apply(&self, s: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if s.len() != n {
            return Err(Error::DimensionMismatch {
                context: "coefficient input",
                expected: n,
                actual: s.len(),
            });
        }
        if let Some(dense) = &self.dense {
            let m = self.m();
            let mut y = vec![0.0; m];
            for (j, &sj) in s.iter().enumerate() {
                if sj == 0.0 {
                    continue;
                }
                let col = &dense[j * m..(j + 1) * m];
                for (yi, &c) in y.iter_mut().zip(col) {
                    *yi += c * sj;
                }
            }
            Ok(y)
        } else {
            let coeffs = WaveletCoeffs::new(s.to_vec(), self.levels)?;
            self.phi.apply(&wavelet::idwt(&coeffs))
        }
    }

    /// `Θᵀ r` for a measurement vector `r` of length `m`.
    pub fn apply_transpose(&self, r: &[f64]) -> Result<Vec<f64>> {
        let m = self.m();
        if r.len() != m {
            return Err(Error::DimensionMismatch {
                context: "measurement-domain input",
                expected: m,
                actual: r.len(),
            });
        }
        if let Some(dense) = &self.dense {
            let n = self.n();
            let mut out = vec![0.0; n];
            for (j, oj) in out.iter_mut().enumerate() {
                let col = &dense[j * m..(j + 1) * m];
                *oj = col.iter().zip(r).map(|(&c, &ri)| c * ri).sum();
            }
            Ok(out)
        } else {
            let back = self.phi.apply_transpose(r)?;
            Ok(wavelet::dwt(&back, self.levels)?.into_data())
        }
    }

    /// Column `j` of the operator.
    pub fn column(&self, j: usize) -> Result<Vec<f64>> {
        let n = self.n();
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, n });
        }
        if let Some(dense) = &self.dense {
            let m = self.m();
            Ok(dense[j * m..(j + 1) * m].to_vec())
        } else {
            let psi_j = wavelet::synthesis_column(j, n, self.levels)?;
            self.phi.apply(&psi_j)
        }
    }
}

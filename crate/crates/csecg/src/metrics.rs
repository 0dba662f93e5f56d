//! Reconstruction-quality and rate metrics, plus the residual-energy curve
//! used to pick a coefficient budget from data.
//!
//! All distortion figures compare a reconstruction against its reference:
//! PRD is the error-to-signal norm ratio in percent, PRDN the same against
//! the mean-removed reference, R-SNR the ratio in decibels. QS divides
//! compression ratio by PRD so rate and distortion move one number.

use crate::error::{Error, Result};
use crate::treemodel::SupportSet;

/// Exact reconstructions would make R-SNR infinite; reports use this
/// sentinel instead so every row stays numeric.
pub const RSNR_CAP_DB: f64 = 300.0;

/// Bit depth of the uncompressed reference samples.
pub const ORIGINAL_BITS_PER_SAMPLE: usize = 11;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn err_norm(x: &[f64], estimate: &[f64], context: &'static str) -> Result<f64> {
    if x.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            context,
            expected: x.len(),
            actual: estimate.len(),
        });
    }
    Ok(x.iter()
        .zip(estimate)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Percent root-mean-square difference: `100 · ‖x − x̂‖ / ‖x‖`.
pub fn prd(x: &[f64], estimate: &[f64]) -> Result<f64> {
    let denom = norm2(x);
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(100.0 * err_norm(x, estimate, "prd inputs")? / denom)
}

/// PRD against the mean-removed reference, insensitive to DC offset.
pub fn prdn(x: &[f64], estimate: &[f64]) -> Result<f64> {
    let mean = x.iter().sum::<f64>() / x.len().max(1) as f64;
    let denom = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    if x.is_empty() || denom == 0.0 {
        return Err(Error::ConstantReference);
    }
    Ok(100.0 * err_norm(x, estimate, "prdn inputs")? / denom)
}

/// Reconstruction SNR in dB, capped at [`RSNR_CAP_DB`] for exact matches.
pub fn rsnr(x: &[f64], estimate: &[f64]) -> Result<f64> {
    let signal = norm2(x);
    if signal == 0.0 {
        return Err(Error::ZeroReference);
    }
    let noise = err_norm(x, estimate, "rsnr inputs")?;
    if noise == 0.0 {
        return Ok(RSNR_CAP_DB);
    }
    Ok((20.0 * (signal / noise).log10()).min(RSNR_CAP_DB))
}

/// Bits-in over bits-out.
pub fn compression_ratio(original_bits: usize, compressed_bits: usize) -> Result<f64> {
    if original_bits == 0 || compressed_bits == 0 {
        return Err(Error::Data {
            reason: format!(
                "compression ratio needs positive bit counts, got {original_bits}/{compressed_bits}"
            ),
        });
    }
    Ok(original_bits as f64 / compressed_bits as f64)
}

/// Fraction of the current support already present in the previous one:
/// `|Ω_t ∩ Ω_{t−1}| / |Ω_t|`. Asymmetric by definition when sizes differ.
pub fn support_overlap(current: &SupportSet, previous: &SupportSet) -> Result<f64> {
    if current.is_empty() {
        return Err(Error::EmptyInput {
            context: "current support",
        });
    }
    Ok(current.intersection_len(previous) as f64 / current.len() as f64)
}

/// Residual energy after keeping the `K` largest-magnitude coefficients,
/// as a fraction of total energy, for `K = 1..=N`. Non-increasing, ends at
/// exactly zero. Equal magnitudes are taken lowest index first, which
/// cannot change any value of the curve.
pub fn residual_energy_curve(s: &[f64]) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::EmptyInput {
            context: "coefficient vector",
        });
    }
    let mut sq: Vec<f64> = s.iter().map(|v| v * v).collect();
    sq.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = sq.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroReference);
    }
    // Summing in the same order for prefixes and total makes C_N exactly 0,
    // and non-negative prefix increments keep the curve non-increasing.
    let mut out = Vec::with_capacity(sq.len());
    let mut prefix = 0.0;
    for &e in &sq {
        prefix += e;
        out.push((total - prefix) / total);
    }
    let last = out.last_mut().unwrap();
    *last = 0.0;
    Ok(out)
}

/// Smallest `K` whose residual energy is at or below `threshold`; the full
/// length when even that never happens (it does: the curve ends at zero).
pub fn select_sparsity(curve: &[f64], threshold: f64) -> usize {
    curve
        .iter()
        .position(|&c| c <= threshold)
        .map(|i| i + 1)
        .unwrap_or(curve.len())
}

/// One evaluated segment, ready for CSV reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport {
    pub algorithm: String,
    pub record: String,
    pub seed: u64,
    pub m: usize,
    pub k_total: usize,
    pub cr: f64,
    pub prd: f64,
    pub prdn: f64,
    pub qs: f64,
    pub rsnr: f64,
    pub iterations: usize,
}

impl SegmentReport {
    pub const CSV_HEADER: &'static str =
        "algorithm,record,seed,M,K_total,CR,PRD,PRDN,QS,R-SNR,iterations";

    /// Derives QS = CR/PRD from the other fields.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        algorithm: impl Into<String>,
        record: impl Into<String>,
        seed: u64,
        m: usize,
        k_total: usize,
        cr: f64,
        prd: f64,
        prdn: f64,
        rsnr: f64,
        iterations: usize,
    ) -> Self {
        Self {
            algorithm: algorithm.into(),
            record: record.into(),
            seed,
            m,
            k_total,
            cr,
            prd,
            prdn,
            qs: cr / prd,
            rsnr,
            iterations,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.record,
            self.seed,
            self.m,
            self.k_total,
            self.cr,
            self.prd,
            self.prdn,
            self.qs,
            self.rsnr,
            self.iterations
        )
    }
}

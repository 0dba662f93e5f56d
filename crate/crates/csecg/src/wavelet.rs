//! Orthogonal Daubechies-4 wavelet transform with periodic boundaries.
//!
//! Defines the coefficient layout every other module indexes against: the
//! transform of a length-`n` signal at depth `L` is stored as
//! `[d1 d2 ... dL aL]` where subband `dj` holds the `n / 2^j` detail
//! coefficients of scale `j` (finest first) and `aL` holds the `n / 2^L`
//! scaling coefficients at the end.
//!
//! Circular convolution keeps the transform exactly orthonormal at every
//! dyadic length, so `idwt` is the adjoint of `dwt` and both preserve the
//! Euclidean norm to machine precision.

use crate::error::{Error, Result};
use std::ops::Range;

/// Daubechies-4 analysis lowpass filter, `(1±√3)/(4√2)` forms:
/// `[(1+√3), (3+√3), (3−√3), (1−√3)] / (4√2)`.
///
/// Values to 15 significant digits: 0.482962913144534, 0.836516303737808,
/// 0.224143868042013, -0.129409522551260.
pub const DB4_LOWPASS: [f64; 4] = [
    0.48296291314453414,
    0.8365163037378079,
    0.2241438680420134,
    -0.12940952255126038,
];

/// Quadrature-mirror highpass filter: `g[k] = (-1)^k h[3-k]`.
pub const DB4_HIGHPASS: [f64; 4] = [
    -0.12940952255126038,
    -0.2241438680420134,
    0.8365163037378079,
    -0.48296291314453414,
];

pub(crate) fn validate_dims(n: usize, levels: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyInput { context: "wavelet input" });
    }
    if levels == 0 || levels >= usize::BITS as usize || (1usize << levels) > n {
        return Err(Error::LevelsOutOfRange { n, levels });
    }
    if !n.is_multiple_of(1 << levels) {
        return Err(Error::NotDyadic { n, levels });
    }
    Ok(())
}

/// Wavelet coefficients in `[d1 d2 ... dL aL]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    data: Vec<f64>,
    levels: usize,
}

impl WaveletCoeffs {
    /// Wraps a raw coefficient vector, validating the subband layout.
    pub fn new(data: Vec<f64>, levels: usize) -> Result<Self> {
        validate_dims(data.len(), levels)?;
        Ok(Self { data, levels })
    }

    /// All-zero coefficients for the given dimensions.
    pub fn zeros(n: usize, levels: usize) -> Result<Self> {
        Self::new(vec![0.0; n], levels)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Index range of detail subband `dj`, `1 <= j <= levels`.
    pub fn detail_range(&self, j: usize) -> Range<usize> {
        detail_range(self.data.len(), j)
    }

    /// Index range of the scaling subband `aL`.
    pub fn scaling_range(&self) -> Range<usize> {
        scaling_range(self.data.len(), self.levels)
    }

    /// The `levels + 1` subband ranges in storage order `d1, ..., dL, aL`.
    pub fn subband_bounds(&self) -> Vec<Range<usize>> {
        let mut bounds: Vec<Range<usize>> =
            (1..=self.levels).map(|j| self.detail_range(j)).collect();
        bounds.push(self.scaling_range());
        bounds
    }

    /// Squared Euclidean norm of the coefficient vector.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Range of detail subband `dj` inside a length-`n` coefficient vector.
pub fn detail_range(n: usize, j: usize) -> Range<usize> {
    debug_assert!(j >= 1);
    let start = n - (n >> (j - 1));
    start..start + (n >> j)
}

/// Range of the scaling subband `aL` inside a length-`n` coefficient vector.
pub fn scaling_range(n: usize, levels: usize) -> Range<usize> {
    n - (n >> levels)..n
}

/// One analysis level: circular convolution with both filters, downsampled.
fn analysis_step(input: &[f64], approx: &mut Vec<f64>, detail: &mut [f64]) {
    let m = input.len();
    let half = m / 2;
    approx.clear();
    for i in 0..half {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for k in 0..4 {
            let v = input[(2 * i + k) % m];
            lo += DB4_LOWPASS[k] * v;
            hi += DB4_HIGHPASS[k] * v;
        }
        approx.push(lo);
        detail[i] = hi;
    }
}

/// One synthesis level: exact adjoint of [`analysis_step`].
fn synthesis_step(approx: &[f64], detail: &[f64], output: &mut [f64]) {
    let m = output.len();
    debug_assert_eq!(approx.len(), m / 2);
    output.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..m / 2 {
        let a = approx[i];
        let d = detail[i];
        for k in 0..4 {
            output[(2 * i + k) % m] += DB4_LOWPASS[k] * a + DB4_HIGHPASS[k] * d;
        }
    }
}

/// Forward transform: `levels`-deep decomposition of `x`.
///
/// Requires `x.len()` divisible by `2^levels` and `levels >= 1`.
pub fn dwt(x: &[f64], levels: usize) -> Result<WaveletCoeffs> {
    let n = x.len();
    validate_dims(n, levels)?;
    let mut out = vec![0.0; n];
    let mut current = x.to_vec();
    let mut next = Vec::with_capacity(n / 2);
    for j in 1..=levels {
        let range = detail_range(n, j);
        analysis_step(&current, &mut next, &mut out[range]);
        std::mem::swap(&mut current, &mut next);
    }
    out[scaling_range(n, levels)].copy_from_slice(&current);
    WaveletCoeffs::new(out, levels)
}

/// Inverse transform; `idwt(dwt(x, L)) == x` to machine precision.
pub fn idwt(coeffs: &WaveletCoeffs) -> Vec<f64> {
    let n = coeffs.len();
    let levels = coeffs.levels();
    let mut approx = coeffs.data()[coeffs.scaling_range()].to_vec();
    let mut output = Vec::new();
    for j in (1..=levels).rev() {
        let range = coeffs.detail_range(j);
        output.resize(2 * approx.len(), 0.0);
        synthesis_step(&approx, &coeffs.data()[range], &mut output);
        std::mem::swap(&mut approx, &mut output);
    }
    debug_assert_eq!(approx.len(), n);
    approx
}

/// The `i`-th column of the synthesis basis, i.e. the inverse transform of a
/// unit coefficient vector.
pub fn synthesis_column(i: usize, n: usize, levels: usize) -> Result<Vec<f64>> {
    validate_dims(n, levels)?;
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let mut unit = WaveletCoeffs::zeros(n, levels)?;
    unit.data_mut()[i] = 1.0;
    Ok(idwt(&unit))
}

//! Lloyd-Max scalar quantizer for measurement differences.
//!
//! Trained once per stream on the open-loop difference distribution, then
//! shared through the header so the decoder dequantizes with the exact same
//! codebook. Training alternates centroid and midpoint updates, which never
//! increases mean squared error; a flat training set collapses the codebook
//! to fewer distinct levels and is flagged rather than rejected.

use crate::error::{Error, Result};

/// Fixed codebook size carried in the stream header.
pub const CODEBOOK_LEN: usize = 256;

#[derive(Debug, Clone)]
pub struct Codebook {
    /// Reconstruction levels, strictly increasing. May hold fewer than
    /// `CODEBOOK_LEN` entries when the training data spans few values.
    levels: Vec<f64>,
    /// Decision thresholds between adjacent levels (`levels.len() - 1`).
    thresholds: Vec<f64>,
    /// True when training merged levels below the requested size.
    collapsed: bool,
}

/// Levels fully determine quantizer behavior; thresholds are derived and the
/// collapsed flag is advisory, so equality compares levels alone.
impl PartialEq for Codebook {
    fn eq(&self, other: &Self) -> bool {
        self.levels == other.levels
    }
}

/// Per-iteration mean squared error trace from training.
#[derive(Debug, Clone)]
pub struct TrainingTrace {
    pub mse: Vec<f64>,
}

impl Codebook {
    /// Trains on sample values by alternating centroid and midpoint updates.
    /// Stops after `max_iterations` or once the relative MSE improvement in
    /// one iteration drops to `tol` or below; `tol = 0` stops only at an
    /// exact stall.
    pub fn train(
        samples: &[f64],
        num_levels: usize,
        max_iterations: usize,
        tol: f64,
    ) -> Result<(Self, TrainingTrace)> {
        if samples.is_empty() {
            return Err(Error::EmptyInput {
                context: "quantizer training samples",
            });
        }
        if num_levels == 0 || num_levels > CODEBOOK_LEN {
            return Err(Error::Quantizer {
                reason: format!("level count {num_levels} outside 1..={CODEBOOK_LEN}"),
            });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Quantizer {
                reason: "training samples must be finite".into(),
            });
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len();

        // Percentile seeding: level k at the (k + 1/2)/L quantile, deduplicated.
        let mut levels: Vec<f64> = (0..num_levels)
            .map(|k| sorted[((k as f64 + 0.5) * n as f64 / num_levels as f64) as usize])
            .collect();
        levels.dedup();

        let mut trace = TrainingTrace { mse: Vec::new() };
        let mut prev_mse = f64::INFINITY;
        for _ in 0..max_iterations {
            let thresholds = midpoints(&levels);
            // Centroid update: each level moves to the mean of its cell.
            // `sorted` lets cells be found by a pair of partition points.
            let mut next = Vec::with_capacity(levels.len());
            let mut lo = 0usize;
            for (k, &level) in levels.iter().enumerate() {
                let hi = if k + 1 < levels.len() {
                    sorted.partition_point(|&v| v < thresholds[k])
                } else {
                    n
                };
                if hi > lo {
                    let mean = sorted[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
                    next.push(mean);
                } else {
                    next.push(level); // empty cell keeps its level
                }
                lo = hi;
            }
            next.dedup();
            levels = next;
            let thresholds = midpoints(&levels);
            let mse = sorted
                .iter()
                .map(|&v| {
                    let cell = thresholds.partition_point(|&t| t <= v);
                    let e = v - levels[cell];
                    e * e
                })
                .sum::<f64>()
                / n as f64;
            trace.mse.push(mse);
            if mse == 0.0 || (prev_mse.is_finite() && prev_mse - mse <= tol * prev_mse) {
                break;
            }
            prev_mse = mse;
        }

        let collapsed = levels.len() < num_levels;
        let thresholds = midpoints(&levels);
        Ok((
            Self {
                levels,
                thresholds,
                collapsed,
            },
            trace,
        ))
    }

    /// Rebuilds a codebook from header levels. Trailing duplicates of the
    /// last level are padding from a collapsed codebook and are stripped.
    pub fn from_levels(raw: &[f64; CODEBOOK_LEN]) -> Result<Self> {
        let mut end = CODEBOOK_LEN;
        while end > 1 && raw[end - 1] == raw[end - 2] {
            end -= 1;
        }
        let levels = raw[..end].to_vec();
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::Quantizer {
                reason: "codebook levels must be finite".into(),
            });
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Quantizer {
                reason: "codebook levels must be strictly increasing".into(),
            });
        }
        let thresholds = midpoints(&levels);
        let collapsed = levels.len() < CODEBOOK_LEN;
        Ok(Self {
            levels,
            thresholds,
            collapsed,
        })
    }

    /// Header form: levels padded to the fixed size by repeating the last.
    pub fn to_levels(&self) -> [f64; CODEBOOK_LEN] {
        let mut out = [*self.levels.last().unwrap(); CODEBOOK_LEN];
        out[..self.levels.len()].copy_from_slice(&self.levels);
        out
    }

    /// Nearest-level index for a value; values beyond the extreme levels
    /// saturate to the first or last index.
    pub fn quantize(&self, value: f64) -> u8 {
        self.thresholds.partition_point(|&t| t <= value) as u8
    }

    pub fn dequantize(&self, index: u8) -> f64 {
        self.levels[(index as usize).min(self.levels.len() - 1)]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_collapsed(&self) -> bool {
        self.collapsed
    }
}

fn midpoints(levels: &[f64]) -> Vec<f64> {
    levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

//! Seeded Monte-Carlo trial runner and the compress/recover pipeline.
//!
//! A trial draws a fresh instance — sensing matrix plus source signal —
//! from seeds derived deterministically from a base seed and the trial
//! index, runs one or more reconstruction methods on the *same* instance,
//! and reports paired outcomes. Batches fan out over the rayon pool when
//! the `parallel` feature is on; the sequential path produces bit-identical
//! results in the same order.

use crate::codec::{self, EncodeStats, EncodedStream, StreamHeader};
use crate::error::{Error, Result};
use crate::metrics;
use crate::par;
use crate::recovery::{oracle_estimate, Algorithm, HaltingRule, RecoveryResult};
use crate::sensing::{MatrixKind, SensingMatrix, Theta};
use crate::signal;
use crate::treemodel::{tree_approx, tree_approx_signal, SupportSet};
use crate::wavelet::{self, WaveletCoeffs};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::fmt;
use std::str::FromStr;

/// A reconstruction method: one of the iterative algorithms, or the oracle
/// that least-squares-fits on the instance's best model support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Algo(Algorithm),
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Algo(Algorithm::Iht),
        Method::Algo(Algorithm::Cosamp),
        Method::Algo(Algorithm::MmbIht),
        Method::Algo(Algorithm::MmbCosamp),
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Algo(a) => a.name(),
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "oracle" {
            return Ok(Method::Oracle);
        }
        Algorithm::from_str(s).map(Method::Algo).map_err(|_| Error::Config {
            reason: format!(
                "unknown method '{s}' (expected one of iht, cosamp, mmb-iht, mmb-cosamp, oracle)"
            ),
        })
    }
}

/// What each trial reconstructs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Exactly model-sparse coefficients (a projected Gaussian draw).
    ModelSparse,
    /// A synthetic ECG segment — compressible but not exactly sparse.
    SyntheticEcg,
}

/// splitmix64 finalizer over base ⊕ salt: cheap, well-mixed per-trial
/// seeds that never collide across salts for a fixed base.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One experiment configuration; trials vary only through derived seeds.
#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub n: usize,
    pub levels: usize,
    pub k_total: usize,
    pub m: usize,
    pub kind: MatrixKind,
    pub q: usize,
    pub halting: HaltingRule,
    pub source: Source,
    pub base_seed: u64,
}

impl TrialSpec {
    pub fn k_detail(&self) -> usize {
        self.k_total.saturating_sub(self.n >> self.levels)
    }
}

/// One method's result on one instance.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub method: Method,
    pub rel_err: f64,
    pub rsnr_db: f64,
    pub prd: f64,
    pub iterations: usize,
}

/// Draws exactly model-sparse coefficients by projecting a dense Gaussian
/// vector onto the tree model; the support is the projection's selection.
pub fn model_sparse_coeffs(
    n: usize,
    levels: usize,
    k_total: usize,
    seed: u64,
) -> Result<(WaveletCoeffs, SupportSet)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dense: Vec<f64> = (0..n).map(|_| crate::rngutil::normal(&mut rng)).collect();
    let coeffs = WaveletCoeffs::new(dense, levels)?;
    let k_detail = k_total.saturating_sub(n >> levels);
    tree_approx(&coeffs, k_detail)
}

/// Instance for a trial: the time-domain signal and the support the oracle
/// gets to see (exact for model-sparse sources, best tree approximation
/// otherwise).
fn make_instance(spec: &TrialSpec, signal_seed: u64) -> Result<(Vec<f64>, SupportSet)> {
    match spec.source {
        Source::ModelSparse => {
            let (coeffs, support) =
                model_sparse_coeffs(spec.n, spec.levels, spec.k_total, signal_seed)?;
            Ok((wavelet::idwt(&coeffs), support))
        }
        Source::SyntheticEcg => {
            let x = signal::synthetic_ecg(spec.n, 250.0, signal_seed);
            let (_, support) = tree_approx_signal(&x, spec.levels, spec.k_detail())?;
            Ok((x, support))
        }
    }
}

/// Runs every method on one fresh instance. Matrix and signal seeds are
/// derived from the trial index, so any trial can be reproduced alone.
pub fn run_trial(spec: &TrialSpec, methods: &[Method], trial: u64) -> Result<Vec<TrialOutcome>> {
    let matrix_seed = derive_seed(spec.base_seed, 2 * trial);
    let signal_seed = derive_seed(spec.base_seed, 2 * trial + 1);
    let phi = SensingMatrix::generate(spec.kind, spec.m, spec.n, spec.q, matrix_seed)?;
    let (x, oracle_support) = make_instance(spec, signal_seed)?;
    let y = phi.apply(&x)?;
    let theta = Theta::new(phi, spec.levels)?;
    let mut outcomes = Vec::with_capacity(methods.len());
    for &method in methods {
        let result = match method {
            Method::Algo(a) => a.run(&theta, &y, spec.k_total, &spec.halting, None)?,
            Method::Oracle => oracle_estimate(&theta, &y, &oracle_support)?,
        };
        outcomes.push(score(spec, trial, method, &x, &result)?);
    }
    Ok(outcomes)
}

fn score(
    _spec: &TrialSpec,
    trial: u64,
    method: Method,
    x: &[f64],
    result: &RecoveryResult,
) -> Result<TrialOutcome> {
    let prd = metrics::prd(x, &result.signal)?;
    let rsnr_db = metrics::rsnr(x, &result.signal)?;
    Ok(TrialOutcome {
        trial,
        method,
        rel_err: prd / 100.0,
        rsnr_db,
        prd,
        iterations: result.iterations,
    })
}

/// Runs `trials` instances, one method set each, on the worker pool.
/// Outcomes come back ordered by trial then method.
pub fn run_batch(spec: &TrialSpec, methods: &[Method], trials: u64) -> Result<Vec<TrialOutcome>> {
    collect_batch(par::map_indexed(trials as usize, |t| {
        run_trial(spec, methods, t as u64)
    }))
}

/// Sequential twin of [`run_batch`]; same outputs, same order.
pub fn run_batch_seq(
    spec: &TrialSpec,
    methods: &[Method],
    trials: u64,
) -> Result<Vec<TrialOutcome>> {
    collect_batch(par::map_indexed_seq(trials as usize, |t| {
        run_trial(spec, methods, t as u64)
    }))
}

fn collect_batch(per_trial: Vec<Result<Vec<TrialOutcome>>>) -> Result<Vec<TrialOutcome>> {
    let mut out = Vec::new();
    for r in per_trial {
        out.extend(r?);
    }
    Ok(out)
}

/// Per-method aggregate over a batch.
#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub method: Method,
    pub trials: usize,
    pub mean_rel_err: f64,
    pub mean_rsnr_db: f64,
    pub mean_prd: f64,
    pub mean_iterations: f64,
    /// Fraction of trials with relative error at or below the threshold.
    pub success_rate: f64,
}

/// Groups outcomes by method (in [`Method::ALL`] order) and averages.
pub fn summarize(outcomes: &[TrialOutcome], success_threshold: f64) -> Vec<MethodSummary> {
    Method::ALL
        .iter()
        .filter_map(|&method| {
            let rows: Vec<&TrialOutcome> =
                outcomes.iter().filter(|o| o.method == method).collect();
            if rows.is_empty() {
                return None;
            }
            let count = rows.len() as f64;
            Some(MethodSummary {
                method,
                trials: rows.len(),
                mean_rel_err: rows.iter().map(|o| o.rel_err).sum::<f64>() / count,
                mean_rsnr_db: rows.iter().map(|o| o.rsnr_db).sum::<f64>() / count,
                mean_prd: rows.iter().map(|o| o.prd).sum::<f64>() / count,
                mean_iterations: rows.iter().map(|o| o.iterations as f64).sum::<f64>() / count,
                success_rate: rows
                    .iter()
                    .filter(|o| o.rel_err <= success_threshold)
                    .count() as f64
                    / count,
            })
        })
        .collect()
}

/// One measurement-count sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub m: usize,
    pub summary: MethodSummary,
}

/// Repeats a batch at each measurement count. Each point reuses the same
/// derived per-trial seeds, so methods and points see paired instances.
pub fn sweep_measurements(
    spec: &TrialSpec,
    methods: &[Method],
    measurement_counts: &[usize],
    trials: u64,
    success_threshold: f64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &m in measurement_counts {
        let point = TrialSpec { m, ..spec.clone() };
        let outcomes = run_batch(&point, methods, trials)?;
        for summary in summarize(&outcomes, success_threshold) {
            rows.push(SweepRow { m, summary });
        }
    }
    Ok(rows)
}

/// Segments a signal, measures every segment, and encodes the stream.
/// Returns the dropped-sample count from segmentation alongside.
pub fn compress_signal(
    phi: &SensingMatrix,
    levels: usize,
    k_total: usize,
    x: &[f64],
) -> Result<(EncodedStream, EncodeStats, usize)> {
    let (segments, dropped) = signal::segment(x, phi.n());
    let mut measured = Vec::with_capacity(segments.len());
    for s in &segments {
        measured.push(phi.apply(s)?);
    }
    let (stream, stats) = codec::encode_segments(phi, levels, k_total, &measured)?;
    Ok((stream, stats, dropped))
}

/// Reconstructs every segment from dequantized measurements, threading the
/// previous segment's support as the warm start. The oracle variant needs
/// ground-truth supports, one per segment.
pub fn reconstruct_measurements(
    header: &StreamHeader,
    measurements: &[Vec<f64>],
    method: Method,
    halting: &HaltingRule,
    oracle_supports: Option<&[SupportSet]>,
) -> Result<Vec<RecoveryResult>> {
    if let (Method::Oracle, None) = (method, oracle_supports) {
        return Err(Error::Config {
            reason: "oracle reconstruction needs ground-truth supports".into(),
        });
    }
    if let Some(supports) = oracle_supports {
        if supports.len() != measurements.len() {
            return Err(Error::DimensionMismatch {
                context: "oracle supports",
                expected: measurements.len(),
                actual: supports.len(),
            });
        }
    }
    let theta = Theta::new(header.sensing_matrix()?, header.levels as usize)?;
    let k_total = header.k_total as usize;
    let mut results: Vec<RecoveryResult> = Vec::with_capacity(measurements.len());
    for (t, y) in measurements.iter().enumerate() {
        let result = match method {
            Method::Algo(a) => {
                let warm = results.last().map(|r| &r.support);
                a.run(&theta, y, k_total, halting, warm)?
            }
            Method::Oracle => oracle_estimate(&theta, y, &oracle_supports.unwrap()[t])?,
        };
        results.push(result);
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(source: Source, m: usize) -> TrialSpec {
        TrialSpec {
            n: 64,
            levels: 3,
            k_total: 14,
            m,
            kind: MatrixKind::DenseBernoulli,
            q: 0,
            halting: HaltingRule {
                max_iterations: 70,
                residual_tolerance: 1e-6,
            },
            source,
            base_seed: 99,
        }
    }

    #[test]
    fn method_names_roundtrip() {
        for method in Method::ALL {
            assert_eq!(method.name().parse::<Method>().unwrap(), method);
        }
        assert!("wht".parse::<Method>().is_err());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: Vec<u64> = (0..100).map(|t| derive_seed(42, t)).collect();
        let mut unique = seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), seeds.len());
    }

    #[test]
    fn model_sparse_instances_live_in_the_model() {
        let tree = crate::treemodel::TreeIndex::new(64, 3).unwrap();
        for seed in 0..5 {
            let (coeffs, support) = model_sparse_coeffs(64, 3, 14, seed).unwrap();
            assert!(support.is_parent_closed(&tree));
            assert_eq!(support.len(), 14);
            let nonzeros = coeffs.data().iter().filter(|&&v| v != 0.0).count();
            assert!(nonzeros <= 14);
            let (again, _) = model_sparse_coeffs(64, 3, 14, seed).unwrap();
            assert_eq!(coeffs.data(), again.data());
        }
    }

    #[test]
    fn batches_are_deterministic_and_match_sequential() {
        let spec = spec(Source::ModelSparse, 48);
        let methods = [Method::Algo(Algorithm::MmbIht), Method::Oracle];
        let a = run_batch(&spec, &methods, 4).unwrap();
        let b = run_batch(&spec, &methods, 4).unwrap();
        let c = run_batch_seq(&spec, &methods, 4).unwrap();
        assert_eq!(a.len(), 8);
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            assert_eq!(x.trial, y.trial);
            assert_eq!(x.method, z.method);
            assert_eq!(x.rel_err.to_bits(), y.rel_err.to_bits());
            assert_eq!(x.rel_err.to_bits(), z.rel_err.to_bits());
        }
    }

    #[test]
    fn oracle_nails_model_sparse_instances() {
        let spec = spec(Source::ModelSparse, 48);
        let outcomes = run_batch(&spec, &[Method::Oracle], 6).unwrap();
        for o in &outcomes {
            assert!(o.rel_err < 1e-9, "trial {} err {}", o.trial, o.rel_err);
            assert_eq!(o.iterations, 0);
        }
    }

    #[test]
    fn summaries_aggregate_correctly() {
        let outcomes = vec![
            TrialOutcome {
                trial: 0,
                method: Method::Oracle,
                rel_err: 0.2,
                rsnr_db: 10.0,
                prd: 20.0,
                iterations: 4,
            },
            TrialOutcome {
                trial: 1,
                method: Method::Oracle,
                rel_err: 0.0,
                rsnr_db: 30.0,
                prd: 0.0,
                iterations: 8,
            },
        ];
        let summaries = summarize(&outcomes, 1e-3);
        assert_eq!(summaries.len(), 1);
        let s = &summaries[0];
        assert_eq!(s.trials, 2);
        assert_eq!(s.mean_rsnr_db, 20.0);
        assert_eq!(s.mean_iterations, 6.0);
        assert_eq!(s.success_rate, 0.5);
    }

    #[test]
    fn more_measurements_do_not_hurt() {
        let spec = spec(Source::ModelSparse, 0);
        let rows = sweep_measurements(
            &spec,
            &[Method::Algo(Algorithm::MmbIht)],
            &[28, 56],
            6,
            1e-3,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(
            rows[1].summary.success_rate >= rows[0].summary.success_rate,
            "{} then {}",
            rows[0].summary.success_rate,
            rows[1].summary.success_rate
        );
    }

    #[test]
    fn pipeline_roundtrip_reconstructs_reasonably() {
        let x = signal::synthetic_ecg(3 * 64, 250.0, 5);
        let phi = SensingMatrix::generate(MatrixKind::DenseBernoulli, 40, 64, 0, 11).unwrap();
        let (stream, stats, dropped) = compress_signal(&phi, 3, 14, &x).unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(stream.frames.len(), 3);
        let bytes = stream.serialize();
        let (parsed, measurements) = codec::decode_segments(&bytes).unwrap();
        assert_eq!(measurements, stats.reconstructions);
        let halting = HaltingRule::default();
        let results = reconstruct_measurements(
            &parsed.header,
            &measurements,
            Method::Algo(Algorithm::MmbIht),
            &halting,
            None,
        )
        .unwrap();
        assert_eq!(results.len(), 3);
        let reconstruction: Vec<f64> = results.iter().flat_map(|r| r.signal.clone()).collect();
        let prd = metrics::prd(&x, &reconstruction).unwrap();
        assert!(prd < 50.0, "prd {prd}");
    }

    #[test]
    fn oracle_pipeline_requires_supports() {
        let x = signal::synthetic_ecg(64, 250.0, 5);
        let phi = SensingMatrix::generate(MatrixKind::DenseBernoulli, 40, 64, 0, 11).unwrap();
        let (stream, _, _) = compress_signal(&phi, 3, 14, &x).unwrap();
        let (parsed, measurements) = codec::decode_segments(&stream.serialize()).unwrap();
        let err = reconstruct_measurements(
            &parsed.header,
            &measurements,
            Method::Oracle,
            &HaltingRule::default(),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }
}

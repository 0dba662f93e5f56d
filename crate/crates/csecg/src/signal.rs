//! Signal utilities: a seeded synthetic ECG generator, the 360→250 Hz
//! resampler, and fixed-length segmentation.
//!
//! The generator builds ECG-like traces from Gaussian bumps — P wave, QRS
//! complex, T wave — on jittered beat timing, plus slow baseline wander.
//! It exists so the whole test and benchmark suite runs without any real
//! recordings; it is not a physiological model.

use crate::rngutil;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Rational resampling factor 25/36 as a polyphase windowed-sinc FIR.
const UP: usize = 25;
const DOWN: usize = 36;
/// Kernel half-width in input samples.
const HALF_WIDTH: usize = 20;
/// Kaiser window shape parameter.
const KAISER_BETA: f64 = 8.0;

/// Modified Bessel function I₀ by its power series; converges in a few
/// dozen terms for the argument range a Kaiser window uses.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

fn kaiser(tau: f64) -> f64 {
    let t = tau / (HALF_WIDTH as f64 + 1.0);
    if t.abs() >= 1.0 {
        return 0.0;
    }
    bessel_i0(KAISER_BETA * (1.0 - t * t).sqrt()) / bessel_i0(KAISER_BETA)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
    }
}

/// Resamples a 360 Hz stream to 250 Hz. Output sample `k` sits at input
/// position `k·36/25`, so only 25 distinct fractional offsets occur; each
/// gets a precomputed normalized tap set (normalization makes DC pass
/// exactly). Edges replicate the boundary sample, so expect transients
/// within a kernel width of either end.
pub fn resample_360_to_250(x: &[f64]) -> Vec<f64> {
    let out_len = x.len() * UP / DOWN;
    if out_len == 0 {
        return Vec::new();
    }
    // Anti-aliasing cutoff: 90% of the output Nyquist, in cycles per input
    // sample.
    let cutoff = 0.45 * UP as f64 / DOWN as f64;
    let taps_per_phase = 2 * HALF_WIDTH + 2;
    let mut phases = Vec::with_capacity(UP);
    for p in 0..UP {
        let frac = p as f64 / UP as f64;
        let mut taps = Vec::with_capacity(taps_per_phase);
        let mut sum = 0.0;
        for j in 0..taps_per_phase {
            let tau = (j as f64 - HALF_WIDTH as f64) - frac;
            let w = 2.0 * cutoff * sinc(2.0 * cutoff * tau) * kaiser(tau);
            sum += w;
            taps.push(w);
        }
        for w in taps.iter_mut() {
            *w /= sum;
        }
        phases.push(taps);
    }

    let last = x.len() - 1;
    (0..out_len)
        .map(|k| {
            let num = k * DOWN;
            let base = num / UP;
            let taps = &phases[num % UP];
            taps.iter()
                .enumerate()
                .map(|(j, &w)| {
                    let i = (base + j).saturating_sub(HALF_WIDTH).min(last);
                    w * x[i]
                })
                .sum()
        })
        .collect()
}

/// Splits a stream into consecutive non-overlapping windows of `n` samples,
/// returning the windows and the dropped-remainder length.
pub fn segment(stream: &[f64], n: usize) -> (Vec<Vec<f64>>, usize) {
    assert!(n > 0, "segment length must be positive");
    let count = stream.len() / n;
    let segments = (0..count).map(|i| stream[i * n..(i + 1) * n].to_vec()).collect();
    (segments, stream.len() - count * n)
}

fn add_bump(out: &mut [f64], fs: f64, center_s: f64, amplitude: f64, width_s: f64) {
    let lo = ((center_s - 5.0 * width_s) * fs).floor().max(0.0) as usize;
    let hi = (((center_s + 5.0 * width_s) * fs).ceil() as usize).min(out.len());
    for (i, v) in out.iter_mut().enumerate().take(hi).skip(lo) {
        let t = i as f64 / fs;
        let z = (t - center_s) / width_s;
        *v += amplitude * (-0.5 * z * z).exp();
    }
}

/// Deterministic ECG-like trace: jittered beats of P/QRS/T Gaussian bumps
/// over slow baseline wander, in arbitrary millivolt-like units.
pub fn synthetic_ecg(len: usize, fs: f64, seed: u64) -> Vec<f64> {
    assert!(fs > 0.0, "sample rate must be positive");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = vec![0.0; len];
    let duration = len as f64 / fs;

    let wander_phase = (
        rngutil::uniform(&mut rng, 0.0, std::f64::consts::TAU),
        rngutil::uniform(&mut rng, 0.0, std::f64::consts::TAU),
    );
    let wander_freq = (
        rngutil::uniform(&mut rng, 0.15, 0.30),
        rngutil::uniform(&mut rng, 0.05, 0.12),
    );

    // R-peak schedule around 75 bpm with per-beat interval jitter.
    let mut r = 0.3 + 0.2 * rngutil::uniform01(&mut rng);
    while r < duration + 0.5 {
        let a = 1.0 + 0.1 * rngutil::uniform(&mut rng, -1.0, 1.0);
        add_bump(&mut out, fs, r - 0.19, 0.14 * a, 0.035); // P
        add_bump(&mut out, fs, r - 0.045, -0.12 * a, 0.015); // Q
        add_bump(&mut out, fs, r, a, 0.011); // R
        add_bump(&mut out, fs, r + 0.045, -0.18 * a, 0.016); // S
        add_bump(&mut out, fs, r + 0.27, 0.32 * a, 0.060); // T
        r += 0.8 * (1.0 + 0.06 * rngutil::uniform(&mut rng, -1.0, 1.0));
    }

    for (i, v) in out.iter_mut().enumerate() {
        let t = i as f64 / fs;
        *v += 0.08 * (std::f64::consts::TAU * wander_freq.0 * t + wander_phase.0).sin()
            + 0.05 * (std::f64::consts::TAU * wander_freq.1 * t + wander_phase.1).sin();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::wavelet;

    #[test]
    fn resampler_length_arithmetic() {
        assert_eq!(resample_360_to_250(&vec![0.0; 3600]).len(), 2500);
        assert_eq!(resample_360_to_250(&vec![0.0; 36]).len(), 25);
        assert_eq!(resample_360_to_250(&[]).len(), 0);
        assert_eq!(resample_360_to_250(&[1.0]).len(), 0);
    }

    #[test]
    fn resampler_passes_dc_exactly() {
        let x = vec![2.5; 3600];
        let y = resample_360_to_250(&x);
        for &v in &y {
            assert!((v - 2.5).abs() < 1e-6 * 2.5, "dc drifted to {v}");
        }
    }

    #[test]
    fn resampler_preserves_a_passband_sinusoid() {
        // 10 Hz at 360 Hz in; output instant k is exactly k/250 seconds.
        let x: Vec<f64> = (0..3600)
            .map(|i| (std::f64::consts::TAU * 10.0 * i as f64 / 360.0).sin())
            .collect();
        let y = resample_360_to_250(&x);
        assert_eq!(y.len(), 2500);
        let trimmed = &y[64..y.len() - 64];
        let analytic: Vec<f64> = (64..y.len() - 64)
            .map(|k| (std::f64::consts::TAU * 10.0 * k as f64 / 250.0).sin())
            .collect();
        let err = crate::testutil::rel_err(&analytic, trimmed);
        assert!(err < 0.01, "relative error {err}");
    }

    #[test]
    fn resampler_attenuates_superaudible_content() {
        // 170 Hz is above the 125 Hz output Nyquist and must be crushed.
        let x: Vec<f64> = (0..3600)
            .map(|i| (std::f64::consts::TAU * 170.0 * i as f64 / 360.0).sin())
            .collect();
        let y = resample_360_to_250(&x);
        let peak = y[64..y.len() - 64]
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(peak < 0.01, "alias peak {peak}");
    }

    #[test]
    fn segmentation_counts_and_drops() {
        let stream = vec![1.0; 2560];
        let (segs, dropped) = segment(&stream, 256);
        assert_eq!(segs.len(), 10);
        assert_eq!(dropped, 0);

        let stream = vec![1.0; 2570];
        let (segs, dropped) = segment(&stream, 256);
        assert_eq!(segs.len(), 10);
        assert_eq!(dropped, 10);
        assert!(segs.iter().all(|s| s.len() == 256));

        let (segs, dropped) = segment(&[], 256);
        assert!(segs.is_empty());
        assert_eq!(dropped, 0);
    }

    #[test]
    fn generator_is_deterministic_per_seed() {
        let a = synthetic_ecg(2048, 250.0, 9);
        let b = synthetic_ecg(2048, 250.0, 9);
        let c = synthetic_ecg(2048, 250.0, 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn generator_produces_beats_at_the_configured_rate() {
        let fs = 250.0;
        let x = synthetic_ecg(5000, fs, 4); // 20 seconds
        let peak = x.iter().fold(0.0f64, |m, &v| m.max(v));
        // Count upward crossings of half the R amplitude.
        let threshold = 0.5 * peak;
        let beats = x
            .windows(2)
            .filter(|w| w[0] < threshold && w[1] >= threshold)
            .count();
        // 20 s at ~75 bpm is ~25 beats.
        assert!((20..=30).contains(&beats), "{beats} beats detected");
    }

    #[test]
    fn generator_output_is_wavelet_compressible() {
        let x = synthetic_ecg(2560, 250.0, 7);
        let (segs, _) = segment(&x, 256);
        let mut curve_sum = vec![0.0; 256];
        for s in &segs {
            let coeffs = wavelet::dwt(s, 5).unwrap();
            let curve = metrics::residual_energy_curve(coeffs.data()).unwrap();
            for (acc, c) in curve_sum.iter_mut().zip(&curve) {
                *acc += c;
            }
        }
        for acc in curve_sum.iter_mut() {
            *acc /= segs.len() as f64;
        }
        let k = metrics::select_sparsity(&curve_sum, 0.001);
        assert!(k <= 90, "needed {k} coefficients for 99.9% energy");
    }
}

//! Small shared helpers on top of the seeded ChaCha20 stream.

use rand_core::RngCore;

/// Uniform draw in [0, 1) with 53 bits of precision.
pub fn uniform01(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in [lo, hi).
pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}

/// Standard normal pair via the Box-Muller transform.
pub fn normal_pair(rng: &mut impl RngCore) -> (f64, f64) {
    // 1 - u keeps the log argument strictly positive.
    let u = 1.0 - uniform01(rng);
    let v = uniform01(rng);
    let r = (-2.0 * u.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * v;
    (r * theta.cos(), r * theta.sin())
}

/// Single standard normal draw (discards the pair's second half).
pub fn normal(rng: &mut impl RngCore) -> f64 {
    normal_pair(rng).0
}

//! Compressed-sensing codec for ECG signals.
//!
//! The encoder takes fixed-length ECG segments, compresses them into a small
//! number of random linear measurements, removes inter-frame redundancy by
//! differencing consecutive measurement vectors, and entropy-codes the result
//! with a Lloyd-Max scalar quantizer followed by a canonical Huffman coder.
//! The decoder reverses the entropy layer and reconstructs each segment with
//! greedy recovery algorithms that exploit two pieces of prior structure:
//!
//! - the largest wavelet coefficients of an ECG segment form connected
//!   subtrees across the detail subbands, rooted at the coarsest scale, and
//! - consecutive segments share a large fraction of their wavelet support,
//!   so the previous segment's support is a good warm start.
//!
//! ## Crate layout
//!
//! - [`wavelet`] — orthogonal Daubechies-4 transform with periodic boundaries
//! - [`treemodel`] — connected-subtree sparsity model and its projection
//! - [`sensing`] — seeded Bernoulli / sparse binary measurement matrices
//! - [`recovery`] — IHT, CoSaMP, their model-based variants and the oracle
//! - [`codec`] — differencing, Lloyd-Max quantizer, Huffman coder, bitstream
//! - [`metrics`] — PRD, PRDN, R-SNR, QS, CR, support overlap, energy curves
//! - [`signal`] — synthetic ECG generation, resampling, segmentation
//! - [`experiment`] — seeded Monte-Carlo trial runner used by the benchmarks
//!
//! The `parallel` feature (on by default) runs independent trials on a rayon
//! pool; without it every entry point falls back to sequential execution with
//! identical results.

pub mod codec;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod par;
pub mod recovery;
pub(crate) mod rngutil;
pub mod sensing;
pub mod signal;
#[cfg(test)]
pub(crate) mod testutil;
pub mod treemodel;
pub mod wavelet;

pub use error::{Error, Result};

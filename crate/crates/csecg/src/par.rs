//! Feature-gated data-parallel execution.
//!
//! Trial sweeps and column assembly are embarrassingly parallel; with the
//! `parallel` feature (default) they run on the rayon pool, otherwise on the
//! calling thread. Results are collected in index order, so both paths give
//! identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..n` on the calling thread.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}

/// Sequential reference path; always available so benchmarks can compare
/// against the parallel dispatch directly.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_matches_sequential() {
        let f = |i: usize| (i * i) as u64 ^ 0x5a5a;
        assert_eq!(map_indexed(257, f), map_indexed_seq(257, f));
    }
}

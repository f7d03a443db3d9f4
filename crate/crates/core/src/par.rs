//! Order-preserving data parallelism that degrades to sequential loops
//! without the `std` feature. Reductions always combine partial results in
//! index order, so output is identical either way.

use alloc::vec::Vec;

/// Chunk length used for parallel loops and ordered reductions.
pub const CHUNK: usize = 4096;

/// Applies `f(chunk_index, chunk)` to consecutive `CHUNK`-sized pieces.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "std"))]
    {
        for (i, c) in data.chunks_mut(CHUNK).enumerate() {
            f(i, c);
        }
    }
}

/// Like [`for_each_chunk_mut`] over two equally long slices in lockstep.
pub fn for_each_chunk_pair_mut<A, B, F>(a: &mut [A], b: &mut [B], f: F)
where
    A: Send,
    B: Send,
    F: Fn(usize, &mut [A], &mut [B]) + Sync + Send,
{
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        a.par_chunks_mut(CHUNK)
            .zip(b.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(i, (ca, cb))| f(i, ca, cb));
    }
    #[cfg(not(feature = "std"))]
    {
        for (i, (ca, cb)) in a.chunks_mut(CHUNK).zip(b.chunks_mut(CHUNK)).enumerate() {
            f(i, ca, cb);
        }
    }
}

/// Sums `f(range)` over consecutive index ranges of length `CHUNK`,
/// combining the partial sums in order.
pub fn ordered_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(core::ops::Range<usize>) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let parts: Vec<f64> = map(chunks, |c| f(c * CHUNK..((c + 1) * CHUNK).min(len)));
    parts.iter().sum()
}

/// Ordered max of `f(range)` over chunks.
pub fn ordered_max<F>(len: usize, f: F) -> f64
where
    F: Fn(core::ops::Range<usize>) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let parts: Vec<f64> = map(chunks, |c| f(c * CHUNK..((c + 1) * CHUNK).min(len)));
    parts.iter().fold(0.0, |a, &b| a.max(b))
}

/// `(0..n).map(f).collect()`, possibly in parallel, preserving order.
pub fn map<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        (0..n).map(f).collect()
    }
}

//! Execution helpers shared by the parallel and sequential builds.
//!
//! Every helper fixes the association order of floating point reductions so
//! that results are bit-identical whether or not the `parallel` feature is
//! enabled: sums are split into fixed-size blocks, each block is summed
//! left-to-right, and the per-block partials are folded in block order.

/// Block length for chunked reductions. Also the unit of parallel work.
pub(crate) const REDUCTION_BLOCK: usize = 256;

/// Maps `0..n` through `f`, preserving index order in the output.
#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Applies `f(chunk_index, chunk)` to consecutive `chunk_len` slices of `data`.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    use rayon::prelude::*;
    data.par_chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, chunk)| f(i, chunk));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
        f(i, chunk);
    }
}

/// Sum of `term(i)` for `i in 0..n` with a fixed blocked association order.
pub(crate) fn blocked_sum<F>(n: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if n == 0 {
        return 0.0;
    }
    let blocks = n.div_ceil(REDUCTION_BLOCK);
    let partials = map_collect(blocks, |b| {
        let lo = b * REDUCTION_BLOCK;
        let hi = (lo + REDUCTION_BLOCK).min(n);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += term(i);
        }
        acc
    });
    partials.into_iter().sum()
}

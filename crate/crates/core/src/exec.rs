//! Chunked node loops with a fixed reduction order.
//!
//! Every reduction is split into chunks of [`CHUNK_NODES`] nodes whose
//! partial sums are combined left to right, so parallel and sequential
//! execution produce bitwise identical results.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of grid nodes per work item.
pub const CHUNK_NODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this build can actually run in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

fn chunk_ranges(len: usize) -> impl Iterator<Item = Range<usize>> + Clone {
    (0..len.div_ceil(CHUNK_NODES)).map(move |c| c * CHUNK_NODES..((c + 1) * CHUNK_NODES).min(len))
}

/// Sum `f` over node chunks; the combination order is fixed.
pub fn chunked_sum<F>(exec: Exec, nodes: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let partials: Vec<f64> = if exec.is_parallel() {
        #[cfg(feature = "parallel")]
        {
            let ranges: Vec<_> = chunk_ranges(nodes).collect();
            ranges.into_par_iter().map(&f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!()
    } else {
        chunk_ranges(nodes).map(&f).collect()
    };
    partials.iter().sum()
}

/// Run `f(node_range, out_chunk)` over node chunks where `out` holds
/// `stride` values per node, and return the per-chunk partial sums combined
/// in order.
pub fn chunked_map_sum<F>(exec: Exec, out: &mut [f64], stride: usize, f: F) -> f64
where
    F: Fn(Range<usize>, &mut [f64]) -> f64 + Sync + Send,
{
    let nodes = out.len() / stride.max(1);
    debug_assert_eq!(nodes * stride, out.len());
    let partials: Vec<f64> = if exec.is_parallel() {
        #[cfg(feature = "parallel")]
        {
            out.par_chunks_mut(CHUNK_NODES * stride)
                .enumerate()
                .map(|(c, chunk)| {
                    let start = c * CHUNK_NODES;
                    f(start..start + chunk.len() / stride, chunk)
                })
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!()
    } else {
        out.chunks_mut(CHUNK_NODES * stride)
            .enumerate()
            .map(|(c, chunk)| {
                let start = c * CHUNK_NODES;
                f(start..start + chunk.len() / stride, chunk)
            })
            .collect()
    };
    partials.iter().sum()
}

/// Fold `f` over node chunks, combining chunk results in index order.
pub fn chunked_fold<T, F, G>(exec: Exec, nodes: usize, identity: T, f: F, combine: G) -> T
where
    T: Send + Clone,
    F: Fn(Range<usize>) -> T + Sync + Send,
    G: Fn(T, T) -> T,
{
    let partials: Vec<T> = if exec.is_parallel() {
        #[cfg(feature = "parallel")]
        {
            let ranges: Vec<_> = chunk_ranges(nodes).collect();
            ranges.into_par_iter().map(&f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!()
    } else {
        chunk_ranges(nodes).map(&f).collect()
    };
    partials.into_iter().fold(identity, combine)
}

/// Map `f` over items, keeping the input order.
pub fn map_ordered<I, T, F>(exec: Exec, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    if exec.is_parallel() {
        #[cfg(feature = "parallel")]
        {
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_agree_bitwise_between_modes() {
        let n = 3 * CHUNK_NODES + 17;
        let term = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64);
        let f = |r: Range<usize>| r.map(term).sum::<f64>();
        let a = chunked_sum(Exec::Sequential, n, f);
        let b = chunked_sum(Exec::Parallel, n, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn map_sum_fills_every_chunk() {
        let n = 2 * CHUNK_NODES + 5;
        for exec in [Exec::Sequential, Exec::Parallel] {
            let mut out = vec![0.0; 2 * n];
            let s = chunked_map_sum(exec, &mut out, 2, |r, chunk| {
                for (k, i) in r.clone().enumerate() {
                    chunk[2 * k] = i as f64;
                    chunk[2 * k + 1] = -(i as f64);
                }
                r.len() as f64
            });
            assert_eq!(s, n as f64);
            assert_eq!(out[2 * (n - 1)], (n - 1) as f64);
        }
    }
}

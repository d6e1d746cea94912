//! Thread-count independent parallel reductions.
//!
//! Work is cut into fixed-size chunks, chunks are mapped in parallel and the
//! partial results are combined by a pairwise tree whose shape depends only
//! on the number of chunks. Floating-point results are therefore identical
//! for any rayon pool size.

use rayon::prelude::*;
use std::ops::Range;

/// Maps `0..n` in chunks of `chunk` and folds the results pairwise.
/// Returns `None` when `n == 0`.
pub fn tree_map_reduce<T, M, R>(n: usize, chunk: usize, map: M, reduce: R) -> Option<T>
where
    T: Send,
    M: Fn(Range<usize>) -> T + Sync,
    R: Fn(T, T) -> T + Sync,
{
    let chunk = chunk.max(1);
    let ranges: Vec<Range<usize>> = (0..n)
        .step_by(chunk)
        .map(|s| s..(s + chunk).min(n))
        .collect();
    let parts: Vec<T> = ranges.into_par_iter().map(&map).collect();
    tree_reduce(parts, &reduce)
}

/// Pairwise reduction of `parts` in index order.
pub fn tree_reduce<T, R>(mut parts: Vec<T>, reduce: &R) -> Option<T>
where
    T: Send,
    R: Fn(T, T) -> T + Sync,
{
    while parts.len() > 1 {
        let mut pairs = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            pairs.push((a, it.next()));
        }
        parts = pairs
            .into_par_iter()
            .map(|(a, b)| match b {
                Some(b) => reduce(a, b),
                None => a,
            })
            .collect();
    }
    parts.pop()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_match_and_are_pool_independent() {
        let f = |r: Range<usize>| r.map(|i| (i as f64).sin() * 1e-3).sum::<f64>();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| tree_map_reduce(10_007, 37, f, |x, y| x + y)).unwrap();
        let b = three.install(|| tree_map_reduce(10_007, 37, f, |x, y| x + y)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let direct: f64 = (0..10_007).map(|i| (i as f64).sin() * 1e-3).sum();
        assert!((a - direct).abs() < 1e-9);
    }

    #[test]
    fn empty_is_none() {
        assert!(tree_map_reduce(0, 4, |_| 1, |a, b| a + b).is_none());
        assert_eq!(tree_map_reduce(1, 4, |r| r.len(), |a, b| a + b), Some(1));
    }
}

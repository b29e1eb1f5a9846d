//! Thread-count independent summation.
//!
//! Work is cut into fixed-size chunks, each chunk is summed left to right and
//! the chunk totals are combined by a fixed binary tree. The rounding pattern
//! therefore depends only on the input length.

use rayon::prelude::*;
use std::ops::Add;

pub const CHUNK: usize = 4096;

pub fn pairwise<T: Copy + Add<Output = T> + Default>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::default(),
        1 => xs[0],
        n => {
            let mid = n.div_ceil(2);
            pairwise(&xs[..mid]) + pairwise(&xs[mid..])
        }
    }
}

/// Sum `f(i)` for `i` in `0..n`.
pub fn det_sum<T, F>(n: usize, f: F) -> T
where
    T: Copy + Add<Output = T> + Default + Send + Sync,
    F: Fn(usize) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi).fold(T::default(), |acc, i| acc + f(i))
        })
        .collect();
    pairwise(&partial)
}

/// Accumulate `f(i) = (bucket, value)` for `i` in `0..n` into `buckets`
/// slots. Chunk sizes depend only on `n` and `buckets`.
pub fn det_buckets<F>(n: usize, buckets: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> (usize, f64) + Sync,
{
    let chunk = (16 * CHUNK).max(8 * buckets);
    let parts: Vec<Vec<f64>> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; buckets];
            for i in c * chunk..((c + 1) * chunk).min(n) {
                let (k, v) = f(i);
                acc[k] += v;
            }
            acc
        })
        .collect();
    merge(parts, buckets)
}

fn merge(mut parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    match parts.len() {
        0 => vec![0.0; len],
        1 => parts.pop().expect("one part"),
        n => {
            let right = parts.split_off(n.div_ceil(2));
            let (mut a, b) = rayon::join(|| merge(parts, len), || merge(right, len));
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_across_pools() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| det_sum(100_003, f));
        let b = four.install(|| det_sum(100_003, f));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn buckets_match_across_pools() {
        let f = |i: usize| (i * 7 % 13, ((i as f64) * 0.11).cos());
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| det_buckets(300_001, 13, f));
        let b = three.install(|| det_buckets(300_001, 13, f));
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        let total: f64 = (0..300_001).map(|i| f(i).1).sum();
        assert!((a.iter().sum::<f64>() - total).abs() < 1e-9);
        assert_eq!(det_buckets(0, 4, f), vec![0.0; 4]);
    }

    #[test]
    fn small_inputs() {
        assert_eq!(det_sum(0, |_| 1.0f64), 0.0);
        assert_eq!(det_sum(5, |i| i as f64), 10.0);
        assert_eq!(pairwise(&[1.0f64, 2.0, 3.0]), 6.0);
    }
}

//! Streaming moments with a deterministic parallel reduction.
//!
//! Paths are cut into fixed-size chunks. Each chunk is folded sequentially
//! with Welford updates and the chunk summaries are merged in chunk order
//! with Chan's pairwise formula, so the result depends only on the chunk
//! size and never on the number of workers.

use rayon::prelude::*;

use crate::error::Result;

/// Paths per reduction chunk.
pub(crate) const CHUNK: usize = 256;

/// Running count, mean and centred second moment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        let w = other.count as f64 / n;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.count as f64 * w;
        self.count += other.count;
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

pub(crate) fn merge_all(acc: &mut [Moments], other: &[Moments]) {
    for (a, b) in acc.iter_mut().zip(other) {
        a.merge(b);
    }
}

/// Runs `work(unit_lo, unit_hi)` over `n_units` units in chunks on `workers`
/// threads and merges the chunk results in order with `merge`.
///
/// On failure the error of the lowest failing chunk is returned.
pub(crate) fn chunked_reduce<T, W, M>(n_units: usize, workers: usize, init: T, work: W, mut merge: M) -> Result<T>
where
    T: Send,
    W: Fn(usize, usize) -> Result<T> + Sync,
    M: FnMut(&mut T, T),
{
    let n_chunks = n_units.div_ceil(CHUNK);
    let run = || -> Vec<Result<T>> {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| work(c * CHUNK, ((c + 1) * CHUNK).min(n_units)))
            .collect()
    };
    let parts = if workers == 0 {
        run()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        }
    };
    let mut acc = init;
    for part in parts {
        merge(&mut acc, part?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1 + 1e6).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut split = Moments::default();
        for part in xs.chunks(77) {
            let mut m = Moments::default();
            part.iter().for_each(|&x| m.push(x));
            split.merge(&m);
        }
        for m in [whole, split] {
            assert_eq!(m.count, 1000);
            assert!((m.mean - mean).abs() < 1e-9);
            assert!((m.variance() / var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn reduction_is_worker_independent() {
        let work = |lo: usize, hi: usize| -> Result<Moments> {
            let mut m = Moments::default();
            (lo..hi).for_each(|i| m.push((i as f64).sin()));
            Ok(m)
        };
        let merge = |a: &mut Moments, b: Moments| a.merge(&b);
        let one = chunked_reduce(5000, 1, Moments::default(), work, merge).unwrap();
        let three = chunked_reduce(5000, 3, Moments::default(), work, merge).unwrap();
        assert_eq!(one, three);
    }
}

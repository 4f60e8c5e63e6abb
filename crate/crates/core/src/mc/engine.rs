//! Chunked, seed-reproducible parallel execution.
//!
//! A run of `n` draws is cut into chunks of `chunk_size` draws. Chunk `c`
//! draws from its own ChaCha8 stream: the generator is keyed by
//! `master_seed` (expanded through `seed_from_u64`) and the 64-bit stream id
//! is `(domain << 32) | c`. Chunks are reduced in index order, so the result
//! does not depend on how many threads ran them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Default number of draws per chunk.
pub const DEFAULT_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub chunk_size: usize,
    /// Separates independent uses of one master seed (pilot runs, replicated
    /// experiments) without touching the seed itself.
    pub domain: u32,
}

impl RngSpec {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            chunk_size: DEFAULT_CHUNK,
            domain: 0,
        }
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size.max(1);
        self
    }

    /// Same seed, different stream family.
    pub fn derive(&self, domain: u32) -> Self {
        Self { domain, ..*self }
    }

    pub fn substream(&self, chunk: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream((u64::from(self.domain) << 32) | u64::from(chunk));
        rng
    }

    pub fn chunk_count(&self, n: usize) -> usize {
        n.div_ceil(self.chunk_size.max(1))
    }
}

/// Runs `work(rng, count, acc)` once per chunk and folds the chunk results in
/// chunk order with `merge`. `threads == 0` uses the global rayon pool.
pub fn run_chunks<A, I, W, M>(spec: &RngSpec, n: usize, threads: usize, init: I, work: W, mut merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    W: Fn(&mut ChaCha8Rng, usize, &mut A) + Sync,
    M: FnMut(&mut A, A),
{
    let size = spec.chunk_size.max(1);
    let chunks = spec.chunk_count(n);
    assert!(chunks <= u32::MAX as usize, "too many chunks");
    let body = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = spec.substream(c as u32);
                let count = size.min(n - c * size);
                let mut acc = init();
                work(&mut rng, count, &mut acc);
                acc
            })
            .collect::<Vec<A>>()
    };
    let parts = if threads == 0 {
        body()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(body)
    };
    let mut total = init();
    for part in parts {
        merge(&mut total, part);
    }
    total
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += d * nb / n as f64;
        self.m2 += other.m2 + d * d * na * nb / n as f64;
        self.n = n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

pub fn merge_all(a: &mut [Welford], b: &[Welford]) {
    for (x, y) in a.iter_mut().zip(b) {
        x.merge(y);
    }
}

/// `√(p̂(1 − p̂)/n)`.
pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).max(0.0).sqrt()
    }
}

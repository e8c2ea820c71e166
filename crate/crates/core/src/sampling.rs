//! Exact Poisson variates and reproducible per-chunk generator streams.
//!
//! Stream splitting rule: draws are produced in fixed-size chunks. Chunk `c`
//! of lane `l` under master seed `s` uses
//! `ChaCha8Rng::seed_from_u64(splitmix64(s ^ splitmix64(l)))` with its
//! stream set to `c`. Output therefore depends only on `(s, l, c)` and never
//! on how many worker threads ran the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::special::ln_factorial;

/// Means below this use sequential-search inversion; above, PTRS.
pub const INVERSION_LIMIT: f64 = 30.0;

/// Draws per generator stream.
pub const CHUNK_SIZE: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Method {
    Zero,
    Inversion { mean: f64, p0: f64 },
    Ptrs(Ptrs),
}

/// Hörmann's transformed rejection with squeeze (PTRS) constants.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Ptrs {
    mean: f64,
    ln_mean: f64,
    a: f64,
    b: f64,
    inv_alpha: f64,
    v_r: f64,
}

impl Ptrs {
    fn new(mean: f64) -> Self {
        let sqrt_mean = mean.sqrt();
        let b = 0.931 + 2.53 * sqrt_mean;
        Ptrs {
            mean,
            ln_mean: mean.ln(),
            a: -0.059 + 0.02483 * b,
            b,
            inv_alpha: 1.1239 + 1.1328 / (b - 3.4),
            v_r: 0.9277 - 3.6224 / (b - 2.0),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        loop {
            let u = rng.random::<f64>() - 0.5;
            let v: f64 = rng.random();
            let us = 0.5 - u.abs();
            let k = ((2.0 * self.a / us + self.b) * u + self.mean + 0.43).floor();
            if us >= 0.07 && v <= self.v_r {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + self.inv_alpha.ln() - (self.a / (us * us) + self.b).ln();
            let rhs = -self.mean + k * self.ln_mean - ln_factorial(k as u64);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}

/// Sampler for Poisson(mean), exact for every finite mean ≥ 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonSampler(Method);

impl PoissonSampler {
    /// Panics on a negative or non-finite mean.
    pub fn new(mean: f64) -> Self {
        assert!(
            mean.is_finite() && mean >= 0.0,
            "Poisson mean must be finite and >= 0, got {mean}"
        );
        PoissonSampler(if mean == 0.0 {
            Method::Zero
        } else if mean < INVERSION_LIMIT {
            Method::Inversion {
                mean,
                p0: (-mean).exp(),
            }
        } else {
            Method::Ptrs(Ptrs::new(mean))
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.0 {
            Method::Zero => 0,
            Method::Inversion { mean, p0 } => {
                let u: f64 = rng.random();
                let mut k = 0u64;
                let mut p = p0;
                let mut cdf = p0;
                while u >= cdf {
                    k += 1;
                    p *= mean / k as f64;
                    let next = cdf + p;
                    // The pmf has underflowed or rounding froze the sum; the
                    // remaining tail is below double precision.
                    if next == cdf {
                        break;
                    }
                    cdf = next;
                }
                k
            }
            Method::Ptrs(ptrs) => ptrs.sample(rng),
        }
    }
}

pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    PoissonSampler::new(mean).sample(rng)
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for `(master_seed, lane, chunk)`.
pub fn stream_rng(master_seed: u64, lane: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(master_seed ^ splitmix64(lane)));
    rng.set_stream(chunk);
    rng
}

/// Produce `n` draws with `draw`, chunked over independent streams and run
/// on `workers` threads (0 = all processors). Results come back in chunk
/// order and are identical for every worker count.
pub fn sample_chunked<T, F>(
    n: usize,
    master_seed: u64,
    lane: u64,
    workers: usize,
    draw: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK_SIZE);
    let run_chunk = |c: usize| {
        let mut rng = stream_rng(master_seed, lane, c as u64);
        let len = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
        (0..len).map(|_| draw(&mut rng)).collect::<Vec<T>>()
    };
    let pieces: Vec<Vec<T>> = if workers == 1 {
        (0..chunks).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect())
    };
    pieces.into_iter().flatten().collect()
}

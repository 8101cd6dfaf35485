//! Synthetic data, seeding and checkpoint grids.

use ksgd::bernoulli::bernoulli_poly;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate`; a pure function of its inputs, so replicates
/// can run in any order or on any thread.
pub fn replicate_seed(master_seed: u64, replicate: usize, digest: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ replicate as u64) ^ digest)
}

/// `n` pairs `(x, B_k(x) + sigma * eps)` with `x ~ U[0, 1)` and standard
/// Gaussian `eps`. Samples are drawn one pair at a time, so a shorter stream
/// is a prefix of a longer one with the same seed.
pub fn sample_stream(seed: u64, k: usize, sigma: f64, n: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let eps: f64 = rng.sample(StandardNormal);
            (x, bernoulli_poly(k, x) + sigma * eps)
        })
        .collect()
}

/// `count` distinct integers spaced evenly in log scale over `[lo, hi]`,
/// fewer if rounding makes some coincide.
pub fn log_checkpoints(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let hi = hi.max(1);
    let lo = lo.clamp(1, hi);
    if count <= 1 || lo == hi {
        return vec![hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .collect();
    out[0] = lo;
    out[count - 1] = hi;
    out.dedup();
    out
}

/// `count` log-spaced reals over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

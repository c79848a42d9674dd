use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Samples per reduction chunk. Fixed so the reduction tree does not depend
/// on the worker count.
const CHUNK: u64 = 1024;

/// Summary of complex samples.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SampleStats {
    pub count: u64,
    pub mean: Complex64,
    /// Unbiased sample variance of the complex samples, `E|x - mean|²`.
    pub variance: f64,
    pub stderr: f64,
    pub max_abs: f64,
}

#[derive(Clone, Copy)]
struct Acc {
    n: u64,
    mean: Complex64,
    m2: f64,
    max_abs: f64,
}

impl Acc {
    const EMPTY: Acc = Acc {
        n: 0,
        mean: Complex64::new(0.0, 0.0),
        m2: 0.0,
        max_abs: 0.0,
    };

    fn push(&mut self, x: Complex64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += (delta.conj() * (x - self.mean)).re;
        self.max_abs = self.max_abs.max(x.norm());
    }

    fn merge(self, o: Acc) -> Acc {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        let w = o.n as f64 / n as f64;
        Acc {
            n,
            mean: self.mean + delta * w,
            m2: self.m2 + o.m2 + delta.norm_sqr() * self.n as f64 * w,
            max_abs: self.max_abs.max(o.max_abs),
        }
    }
}

/// Generator for sample `index` under `seed`: one ChaCha8 stream per sample.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Resolves a worker count; `0` means all available cores.
pub fn resolve_workers(workers: usize) -> usize {
    if workers > 0 {
        workers
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

/// Draws `count` samples with `f`, each from its own stream, on `workers`
/// threads. The result is bit-identical for any worker count.
pub fn run_samples<F>(count: u64, seed: u64, workers: usize, f: F) -> Result<SampleStats>
where
    F: Fn(&mut ChaCha8Rng) -> Complex64 + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_workers(workers))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Acc> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = Acc::EMPTY;
                for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                    let mut rng = base.clone();
                    rng.set_stream(i);
                    acc.push(f(&mut rng));
                }
                acc
            })
            .collect()
    });
    let acc = parts.into_iter().fold(Acc::EMPTY, Acc::merge);
    let variance = if acc.n > 1 { acc.m2.max(0.0) / (acc.n - 1) as f64 } else { 0.0 };
    Ok(SampleStats {
        count: acc.n,
        mean: acc.mean,
        variance,
        stderr: if acc.n > 0 { (variance / acc.n as f64).sqrt() } else { 0.0 },
        max_abs: acc.max_abs,
    })
}

/// Draws `count` samples with `f` and returns them in index order. Uses the
/// same per-sample streams as [`run_samples`].
pub fn collect_samples<F>(count: u64, seed: u64, workers: usize, f: F) -> Result<Vec<Complex64>>
where
    F: Fn(&mut ChaCha8Rng) -> Complex64 + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_workers(workers))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    Ok(pool.install(|| {
        (0..count as usize)
            .into_par_iter()
            .with_min_len(CHUNK as usize)
            .map(|i| {
                let mut rng = base.clone();
                rng.set_stream(i as u64);
                f(&mut rng)
            })
            .collect()
    }))
}

/// Mixes a seed with two tags into an independent seed.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

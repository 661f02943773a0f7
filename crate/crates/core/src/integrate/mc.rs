//! Chunked Monte Carlo with per-chunk ChaCha streams.
//!
//! The sample count is split into a fixed number of chunks. Chunk `c`
//! draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `c`, so results
//! depend on `(seed, chunks, n)` only. Chunks run on a rayon pool and are
//! merged in chunk order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::ActionSpec;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "WEYLSEC_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub n: usize,
    pub chunks: usize,
    /// Thread count; 0 picks [`default_workers`]. Never part of a payload.
    #[serde(skip)]
    pub workers: usize,
    /// Gaussian importance density width, relative to the integrand scale.
    pub importance_scale: f64,
    /// Points per angle for torus quadrature.
    pub grid: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_901,
            n: 100_000,
            chunks: 64,
            workers: 0,
            importance_scale: 1.25,
            grid: 64,
        }
    }
}

impl McConfig {
    pub fn new(seed: u64, n: usize) -> Self {
        Self {
            seed,
            n,
            ..Self::default()
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_chunks(mut self, chunks: usize) -> Self {
        self.chunks = chunks;
        self
    }

    /// Same configuration on an independent seed.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            seed: mix_seed(self.seed, tag),
            ..*self
        }
    }
}

/// SplitMix64 finalizer applied to `seed + tag·φ`.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed.wrapping_add(tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&w: &usize| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Sizes of the chunks, differing by at most one.
pub fn chunk_sizes(n: usize, chunks: usize) -> Vec<usize> {
    let chunks = chunks.max(1);
    (0..chunks).map(|c| n / chunks + usize::from(c < n % chunks)).collect()
}

/// Runs `f(rng, chunk_len)` for every chunk and returns results in chunk
/// order.
pub fn run_chunks<T, F>(cfg: &McConfig, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    let sizes = chunk_sizes(cfg.n, cfg.chunks);
    let workers = if cfg.workers == 0 { default_workers() } else { cfg.workers };
    let job = || {
        sizes
            .par_iter()
            .enumerate()
            .map(|(c, &len)| f(&mut chunk_rng(cfg.seed, c), len))
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Running mean and centered second moment.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Self) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
    }

    /// Sample standard deviation over `√n`.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Mean estimates of `outputs` quantities; `sample` fills one value per
/// quantity for each draw.
pub fn mc_moments<F>(cfg: &McConfig, outputs: usize, sample: F) -> Vec<Moments>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync + Send,
{
    let per_chunk = run_chunks(cfg, |rng, len| {
        let mut acc = vec![Moments::default(); outputs];
        let mut buf = vec![0.0; outputs];
        for _ in 0..len {
            sample(rng, &mut buf);
            for (a, &v) in acc.iter_mut().zip(&buf) {
                a.push(v);
            }
        }
        acc
    });
    let mut total = vec![Moments::default(); outputs];
    for chunk in &per_chunk {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.merge(c);
        }
    }
    total
}

/// A Monte Carlo (or quadrature) estimate with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub chunks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
}

impl McEstimate {
    pub fn from_moments(m: &Moments, cfg: &McConfig) -> Self {
        Self {
            mean: m.mean,
            stderr: m.stderr(),
            n_samples: m.n as usize,
            seed: cfg.seed,
            chunks: cfg.chunks,
            action: None,
            function: None,
        }
    }

    pub fn exact(value: f64, n_samples: usize, cfg: &McConfig) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            n_samples,
            seed: cfg.seed,
            chunks: cfg.chunks,
            action: None,
            function: None,
        }
    }

    pub fn labeled(mut self, action: &ActionSpec, function: impl Into<String>) -> Self {
        self.action = Some(*action);
        self.function = Some(function.into());
        self
    }

    pub fn measured(&self) -> Measured {
        Measured::new(self.mean, self.stderr)
    }

    /// Multiplies by an independent measured factor.
    pub fn scaled_by(mut self, m: Measured) -> Self {
        let v = self.measured().times(m);
        self.mean = v.value;
        self.stderr = v.stderr;
        self
    }
}

/// A value with a standard error; products and ratios propagate errors to
/// first order, assuming independent inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub stderr: f64,
}

impl Measured {
    pub fn new(value: f64, stderr: f64) -> Self {
        Self { value, stderr }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(self.value * c, self.stderr * c.abs())
    }

    pub fn times(self, o: Self) -> Self {
        let v = self.value * o.value;
        let e = ((self.stderr * o.value).powi(2) + (o.stderr * self.value).powi(2)).sqrt();
        Self::new(v, e)
    }

    pub fn over(self, o: Self) -> Self {
        let v = self.value / o.value;
        let e = ((self.stderr / o.value).powi(2) + (v * o.stderr / o.value).powi(2)).sqrt();
        Self::new(v, e)
    }

    /// `|a − b|` in units of the combined standard error.
    pub fn sigma_distance(self, o: Self) -> f64 {
        let d = (self.value - o.value).abs();
        let s = self.stderr.hypot(o.stderr);
        if d == 0.0 {
            0.0
        } else if s == 0.0 {
            f64::INFINITY
        } else {
            d / s
        }
    }

    /// Within `k` combined standard errors.
    pub fn agrees(self, o: Self, k: f64) -> bool {
        self.sigma_distance(o) <= k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chunk_sizes_cover_n() {
        assert_eq!(chunk_sizes(10, 3), vec![4, 3, 3]);
        assert_eq!(chunk_sizes(0, 4).iter().sum::<usize>(), 0);
        assert_eq!(chunk_sizes(1_000_001, 64).iter().sum::<usize>(), 1_000_001);
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut one = Moments::default();
        xs.iter().for_each(|&x| one.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - one.mean).abs() < 1e-12);
        assert!((a.m2 - one.m2).abs() < 1e-9 * one.m2);
        let naive_var = xs.iter().map(|x| (x - one.mean).powi(2)).sum::<f64>() / 999.0;
        assert!((one.stderr() - (naive_var / 1000.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bit_identical_across_worker_counts() {
        let base = McConfig::new(7, 20_000).with_chunks(16);
        let run = |w: usize| {
            mc_moments(&base.with_workers(w), 2, |rng, out| {
                let u: f64 = rng.random();
                out[0] = u;
                out[1] = u * u;
            })
        };
        let r1 = run(1);
        for w in [2, 8] {
            let r = run(w);
            for (a, b) in r1.iter().zip(&r) {
                assert_eq!(a.mean.to_bits(), b.mean.to_bits());
                assert_eq!(a.m2.to_bits(), b.m2.to_bits());
            }
        }
        assert!((r1[0].mean - 0.5).abs() < 4.0 * r1[0].stderr());
    }

    #[test]
    fn derived_seeds_differ() {
        let c = McConfig::default();
        assert_ne!(c.derive(0).seed, c.derive(1).seed);
        assert_eq!(c.derive(3).seed, c.derive(3).seed);
    }

    #[test]
    fn measured_arithmetic() {
        let a = Measured::new(2.0, 0.1);
        let b = Measured::new(4.0, 0.2);
        let r = a.over(b);
        assert!((r.value - 0.5).abs() < 1e-15);
        // relative errors add in quadrature
        assert!((r.stderr / r.value - (0.05f64.hypot(0.05))).abs() < 1e-12);
        assert!((a.sigma_distance(b) - 2.0 / 0.1f64.hypot(0.2)).abs() < 1e-12);
        assert_eq!(Measured::exact(1.0).sigma_distance(Measured::exact(1.0)), 0.0);
    }
}

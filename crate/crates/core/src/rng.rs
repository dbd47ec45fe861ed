//! Deterministic random source and the Beta sampler used for mixing weights.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded, counter-based random stream.
///
/// Backed by ChaCha8, so [`RandomSource::split`] can hand out independent
/// substreams (same key, different stream id) without touching this stream's
/// position. Not `Clone`: a source has a single owner and is threaded through
/// calls explicitly.
#[derive(Debug)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent substream `stream` of the same seed, starting at counter 0.
    pub fn split(&self, stream: u64) -> RandomSource {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream.wrapping_add(1));
        RandomSource { seed: self.seed, rng }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw from the open interval (0, 1) with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Fisher-Yates shuffle in place.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Uniformly random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }

    fn standard_normal(&mut self) -> f64 {
        // Box-Muller, discarding the second deviate to keep the stream stateless.
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Draws from the symmetric Beta(alpha, alpha) distribution.
///
/// Uses Jöhnk's algorithm for `alpha <= 1` (evaluated in log space so tiny
/// powers do not underflow) and a ratio of Marsaglia-Tsang gamma variates for
/// `alpha > 1`, where Jöhnk's acceptance rate collapses.
pub fn beta_sample(rng: &mut RandomSource, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta coefficient must be positive and finite, got {alpha}"
        )));
    }
    if alpha <= 1.0 {
        Ok(johnk(rng, alpha, alpha))
    } else {
        let x = gamma(rng, alpha);
        let y = gamma(rng, alpha);
        Ok(x / (x + y))
    }
}

fn johnk(rng: &mut RandomSource, a: f64, b: f64) -> f64 {
    loop {
        let log_x = rng.uniform().ln() / a;
        let log_y = rng.uniform().ln() / b;
        let log_max = log_x.max(log_y);
        let ex = (log_x - log_max).exp();
        let ey = (log_y - log_max).exp();
        // accept when X + Y <= 1
        if log_max + (ex + ey).ln() <= 0.0 {
            return ex / (ex + ey);
        }
    }
}

fn gamma(rng: &mut RandomSource, shape: f64) -> f64 {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z = rng.standard_normal();
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform();
        if u.ln() < 0.5 * z * z + d - d * v + d * v.ln() {
            return d * v;
        }
    }
}

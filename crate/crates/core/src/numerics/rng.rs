//! Seeded pseudo-randomness.
//!
//! xoshiro256++ seeded through splitmix64. Hand-rolled so that streams are
//! bit-stable across platforms and dependency upgrades; the database
//! round-trip and determinism guarantees rely on that.

use crate::scalar::Scalar;

use super::Matrix;

/// Deterministic PRNG: identical seed + call sequence yields an identical
/// output stream.
#[derive(Debug, Clone)]
pub struct SeededRng {
    state: [u64; 4],
    spare_normal: Option<f64>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        Self {
            state: [
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
            ],
            spare_normal: None,
        }
    }

    /// Derives an independent child stream. Used to give each arc / entity
    /// its own stream so work order does not perturb results.
    pub fn derive(&self, tag: u64) -> Self {
        let mut sm = self.state[0] ^ tag.wrapping_mul(0x9e3779b97f4a7c15);
        Self::new(splitmix64(&mut sm))
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Unbiased integer in [0, n) by rejection.
    pub fn next_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_index on empty range");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller; one draw is cached, so samples come
    /// in deterministic pairs.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        // u1 in (0, 1] to keep ln finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.next_normal()
    }
}

/// Matrix with i.i.d. uniform entries in [lo, hi).
pub fn random_uniform<S: Scalar>(
    rng: &mut SeededRng,
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
) -> Matrix<S> {
    let values = (0..rows * cols)
        .map(|_| S::from_f64_lossy(rng.uniform(lo, hi)))
        .collect();
    Matrix::from_vec(rows, cols, values).expect("finite uniform draws")
}

/// Matrix with i.i.d. Gaussian entries.
pub fn random_normal<S: Scalar>(
    rng: &mut SeededRng,
    rows: usize,
    cols: usize,
    mean: f64,
    std: f64,
) -> Matrix<S> {
    let values = (0..rows * cols)
        .map(|_| S::from_f64_lossy(rng.normal(mean, std)))
        .collect();
    Matrix::from_vec(rows, cols, values).expect("finite normal draws")
}

/// Xavier-uniform init: limit = sqrt(6 / (fan_in + fan_out)).
pub fn xavier_uniform<S: Scalar>(rng: &mut SeededRng, fan_in: usize, fan_out: usize) -> Matrix<S> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    random_uniform(rng, fan_in, fan_out, -limit, limit)
}

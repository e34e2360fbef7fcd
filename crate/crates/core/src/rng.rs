//! Seeded randomness.
//!
//! Every stochastic component draws from [`SeededRng`], a SplitMix64 stream
//! (64-bit state, Steele/Lea/Flood 2014). Independent sub-streams are derived
//! with [`fork`], which consumes one output of the parent as the child's seed,
//! so a single top-level seed fixes every draw bit for bit.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
pub use rand_xoshiro::SplitMix64 as SeededRng;

pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Child stream; advances the parent by one draw.
pub fn fork(parent: &mut SeededRng) -> SeededRng {
    SeededRng::seed_from_u64(parent.next_u64())
}

/// Stateless derivation of a per-item seed, for parallel-safe generation.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut rng = SeededRng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.next_u64()
}

pub fn standard_normal(rng: &mut SeededRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Normal(0, sigma) truncated to [-bound, bound] by rejection.
pub fn truncated_normal(rng: &mut SeededRng, sigma: f64, bound: f64) -> f64 {
    loop {
        let v = sigma * standard_normal(rng);
        if v.abs() <= bound {
            return v;
        }
    }
}

/// Scale of the underlying normal whose truncation to [-bound, bound] has
/// standard deviation `std`. Requires `std < bound / sqrt(3)`.
pub fn truncated_normal_scale(std: f64, bound: f64) -> f64 {
    let truncated_std = |scale: f64| {
        let a = bound / scale;
        let pdf = (-a * a / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mass = libm::erf(a / std::f64::consts::SQRT_2);
        scale * (1.0 - 2.0 * a * pdf / mass).sqrt()
    };
    let (mut lo, mut hi) = (std, 1e3 * bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if truncated_std(mid) < std {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn uniform(rng: &mut SeededRng) -> f64 {
    rng.gen::<f64>()
}

pub fn shuffle<T>(items: &mut [T], rng: &mut SeededRng) {
    items.shuffle(rng);
}

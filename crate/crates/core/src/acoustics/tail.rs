//! Stochastic late-reverberation synthesis.
//!
//! The late field is modelled as Gaussian noise shaped by a deterministic
//! power envelope: `h[n] = √(σ²[n]) · g[n]` with `g ~ N(0,1)` drawn from a
//! seeded stream, so `E[h²[n]] = σ²[n]` and regeneration is bit-identical.

use crate::num::Sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Converts an acoustic energy density estimate `w(tₙ)` (energy per unit
/// volume, per unit source energy) into the per-sample power of a pressure
/// impulse response whose direct sound has amplitude `1/(4πd)`:
/// `σ²[n] = (c / 4π) · w(tₙ) / fs`.
pub(crate) fn density_to_sample_power(w: f64, speed_of_sound: f64, sample_rate: u32) -> f64 {
    (speed_of_sound / (4.0 * std::f64::consts::PI)) * w / sample_rate as f64
}

/// Seeded Gaussian noise with per-sample variance `sigma_sq` (negative
/// values are treated as zero power).
pub(crate) fn noise_tail<T: Sample>(sigma_sq: &[f64], seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sigma_sq
        .iter()
        .map(|&p| {
            let g: f64 = StandardNormal.sample(&mut rng);
            T::of(p.max(0.0).sqrt() * g)
        })
        .collect()
}

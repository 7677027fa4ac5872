//! Room-acoustics simulation and speech-corpus augmentation.
//!
//! The crate simulates room impulse responses with a family of geometric,
//! statistical and wave-based models, convolves and noise-mixes speech
//! corpora into reverberant training data, trains a small frame-level
//! voice-activity model on the result, and evaluates it.
//!
//! All numeric code is generic over the scalar type via [`num::Sample`]
//! (`f32` or `f64`); the `*32`/`*64` aliases at the crate root pick one.

pub mod acoustics;
pub mod corpus;
pub mod dsp;
pub mod eval;
pub mod geometry;
pub mod num;
pub mod seed;
pub mod vad;

pub type Room32 = geometry::Room<f32>;
pub type Room64 = geometry::Room<f64>;
pub type Scenario32 = geometry::Scenario<f32>;
pub type Scenario64 = geometry::Scenario<f64>;
pub type Vec3f = geometry::Vec3<f32>;
pub type Vec3d = geometry::Vec3<f64>;
pub type Rir32 = acoustics::Rir<f32>;
pub type Rir64 = acoustics::Rir<f64>;

//! Signal plumbing: buffers, fast convolution, noise synthesis, SNR mixing.

mod conv;
mod mix;
mod noise;
mod signal;

use std::path::PathBuf;

use thiserror::Error;

pub use conv::{convolve, convolve_samples, FftConvolver};
pub use mix::{masked_mean_power, mix_at_snr, FrameMask, MixSpec};
pub use noise::{generate_noise, NoiseKind};
pub use signal::Signal;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("{0} is empty")]
    EmptySignal(&'static str),
    #[error("{0} contains non-finite values")]
    NonFinite(&'static str),
    #[error("sample rates differ: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: u32, right: u32 },
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("frame length and hop must be positive (got {frame_len} and {hop})")]
    BadFrameGeometry { frame_len: usize, hop: usize },
    #[error("mask has no active frames to measure power over")]
    NoActiveFrames,
    #[error("{0} has zero power over the mask; cannot set an SNR")]
    SilentReference(&'static str),
    #[error("file noise {path:?} must be loaded before mixing; it cannot be synthesised")]
    UnresolvedFileNoise { path: PathBuf },
}

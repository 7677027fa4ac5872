//! Corpus handling: WAV and label I/O, silence padding, a synthetic anechoic
//! corpus for self-contained runs, and the train/test set builders that mix
//! noise and convolve with simulated impulse responses under a reproducible
//! manifest.

mod build;
mod labels;
mod synth;
mod wav;

use std::path::PathBuf;

use thiserror::Error;

use crate::acoustics::AcousticsError;
use crate::dsp::{DspError, Signal};
use crate::num::Sample;

pub use build::{
    build_test_set, build_training_set, load_manifest, save_manifest, EntryOutcome, Manifest,
    ManifestEntry, RirParameters, RirSidecar, TrainingSetConfig,
};
pub use labels::LabelTrack;
pub use synth::{synth_corpus, SynthConfig};
pub use wav::{read_rir_wav, read_wav, write_rir_wav, write_wav};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid label track: {0}")]
    InvalidLabels(String),
    #[error("labels end at {label_end:.3} s but the signal lasts {duration:.3} s")]
    LabelsPastEnd { label_end: f64, duration: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("{0} must not be empty")]
    EmptyCorpus(&'static str),
    #[error("sample rates differ: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: u32, right: u32 },
    #[error("unsupported WAV layout in {path:?}: {detail}")]
    UnsupportedWav { path: PathBuf, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
}

/// An anechoic recording with its speech labels.
#[derive(Clone, Debug)]
pub struct Utterance<T> {
    pub utterance_id: String,
    pub signal: Signal<T>,
    pub labels: LabelTrack,
}

impl<T: Sample> Utterance<T> {
    /// Builds an utterance, checking that the labels fit inside the signal.
    pub fn new(
        utterance_id: impl Into<String>,
        signal: Signal<T>,
        labels: LabelTrack,
    ) -> Result<Utterance<T>, CorpusError> {
        let duration = signal.duration();
        // Half a sample of slack: label times are often derived from sample
        // counts and may round past the exact duration.
        if labels.end_time() > duration + 0.5 / signal.sample_rate as f64 {
            return Err(CorpusError::LabelsPastEnd {
                label_end: labels.end_time(),
                duration,
            });
        }
        Ok(Utterance {
            utterance_id: utterance_id.into(),
            signal,
            labels,
        })
    }
}

/// Where [`pad_silence`] inserts the zeros.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadPosition {
    Prepend,
    #[default]
    Append,
    /// Half before, half after (odd sample counts put the extra sample at
    /// the end).
    Split,
}

/// Extends an utterance with `duration` seconds of digital silence. Labels
/// keep marking the same audio: appending leaves them untouched, prepending
/// shifts them by the inserted time.
pub fn pad_silence<T: Sample>(
    utt: &Utterance<T>,
    duration: f64,
    position: PadPosition,
) -> Result<Utterance<T>, CorpusError> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(CorpusError::InvalidParam(format!(
            "padding duration must be non-negative, got {duration}"
        )));
    }
    let rate = utt.signal.sample_rate;
    let extra = (duration * rate as f64).round() as usize;
    if extra == 0 {
        return Ok(utt.clone());
    }
    let (front, back) = match position {
        PadPosition::Prepend => (extra, 0),
        PadPosition::Append => (0, extra),
        PadPosition::Split => (extra / 2, extra - extra / 2),
    };
    let mut samples = Vec::with_capacity(front + utt.signal.samples.len() + back);
    samples.resize(front, T::zero());
    samples.extend_from_slice(&utt.signal.samples);
    samples.resize(samples.len() + back, T::zero());
    let labels = utt.labels.shifted(front as f64 / rate as f64)?;
    Utterance::new(
        utt.utterance_id.clone(),
        Signal {
            samples,
            sample_rate: rate,
        },
        labels,
    )
}

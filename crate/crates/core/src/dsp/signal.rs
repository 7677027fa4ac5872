use crate::dsp::DspError;
use crate::num::Sample;

/// A mono audio buffer with its sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
}

impl<T: Sample> Signal<T> {
    /// Builds a signal, rejecting empty buffers, zero rates and non-finite
    /// samples. Code paths that construct samples arithmetically may fill the
    /// fields directly; this is the checked entry point for external data.
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self, DspError> {
        if sample_rate == 0 {
            return Err(DspError::ZeroSampleRate);
        }
        if samples.is_empty() {
            return Err(DspError::EmptySignal("signal"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(DspError::NonFinite("signal"));
        }
        Ok(Signal {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sum of squared samples, accumulated in f64.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|&s| {
            let s = s.as_f64();
            s * s
        }).sum()
    }
}

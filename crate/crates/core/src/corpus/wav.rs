use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::CorpusError;
use crate::dsp::Signal;
use crate::num::Sample;

/// Reads a mono WAV file. 16-bit PCM and 32-bit float are accepted; PCM
/// samples are scaled to [−1, 1) by 1/32768.
pub fn read_wav<T: Sample>(path: &Path) -> Result<Signal<T>, CorpusError> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(CorpusError::UnsupportedWav {
            path: path.to_path_buf(),
            detail: format!("{} channels; only mono is supported", spec.channels),
        });
    }
    let samples: Vec<T> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| Ok(T::of(s? as f64 / 32768.0)))
            .collect::<Result<_, CorpusError>>()?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| Ok(T::of(s? as f64)))
            .collect::<Result<_, CorpusError>>()?,
        (format, bits) => {
            return Err(CorpusError::UnsupportedWav {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {format:?}; expected 16-bit PCM or 32-bit float"),
            })
        }
    };
    Ok(Signal::new(samples, spec.sample_rate)?)
}

/// Writes a corpus signal as mono 16-bit PCM, rounding and saturating at
/// full scale.
pub fn write_wav<T: Sample>(path: &Path, signal: &Signal<T>) -> Result<(), CorpusError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &s in &signal.samples {
        let q = (s.as_f64() * 32767.0).round().clamp(-32768.0, 32767.0);
        writer.write_sample(q as i16)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Writes an impulse response as mono 32-bit float, preserving the wide
/// dynamic range of a decay curve.
pub fn write_rir_wav<T: Sample>(
    path: &Path,
    samples: &[T],
    sample_rate: u32,
) -> Result<(), CorpusError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &s in samples {
        writer.write_sample(s.as_f64() as f32)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Reads an impulse response; same formats as [`read_wav`].
pub fn read_rir_wav<T: Sample>(path: &Path) -> Result<Signal<T>, CorpusError> {
    read_wav(path)
}

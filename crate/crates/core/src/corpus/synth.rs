use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, LabelTrack, Utterance};
use crate::dsp::Signal;
use crate::num::Sample;
use crate::seed::derive_seed;

/// Parameters for the synthetic anechoic corpus: utterances alternate true
/// silence with voiced segments built from harmonic stacks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub sample_rate: u32,
    /// Uniform range for total utterance duration (seconds).
    pub duration_range: (f64, f64),
    /// Uniform range for silence segment length (seconds).
    pub silence_range: (f64, f64),
    /// Uniform range for voiced segment length (seconds).
    pub voiced_range: (f64, f64),
    /// Uniform range for the fundamental (Hz).
    pub f0_range: (f64, f64),
    /// Harmonics in the stack; harmonic k has relative amplitude 1/k.
    pub harmonics: usize,
    /// Uniform range for the amplitude-modulation rate (Hz).
    pub am_rate_range: (f64, f64),
    /// Modulation depth of the ±sin envelope.
    pub am_depth: f64,
    /// Peak amplitude of a voiced segment.
    pub amplitude: f64,
    /// Raised-cosine fade length at each voiced segment edge (seconds).
    pub ramp: f64,
    /// Segment boundaries are rounded to multiples of this (seconds), so a
    /// frame grid with the same quantum sees each frame as purely voiced or
    /// purely silent — unambiguous ground truth for frame-level scoring.
    pub boundary_quantum: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sample_rate: 16_000,
            duration_range: (2.0, 4.0),
            silence_range: (0.25, 0.7),
            voiced_range: (0.3, 0.8),
            f0_range: (90.0, 250.0),
            harmonics: 5,
            am_rate_range: (3.0, 8.0),
            am_depth: 0.35,
            amplitude: 0.3,
            ramp: 0.005,
            boundary_quantum: 0.025,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), CorpusError> {
        let ranges = [
            ("duration_range", self.duration_range),
            ("silence_range", self.silence_range),
            ("voiced_range", self.voiced_range),
            ("f0_range", self.f0_range),
            ("am_rate_range", self.am_rate_range),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
                return Err(CorpusError::InvalidParam(format!(
                    "{name} must be an increasing positive range, got [{lo}, {hi}]"
                )));
            }
        }
        if self.sample_rate == 0
            || self.harmonics == 0
            || !(0.0..1.0).contains(&self.am_depth)
            || !(self.amplitude > 0.0 && self.amplitude <= 1.0)
            || !(self.ramp >= 0.0 && self.boundary_quantum > 0.0)
        {
            return Err(CorpusError::InvalidParam(
                "synthesis parameters out of range".into(),
            ));
        }
        if self.f0_range.1 * self.harmonics as f64 >= self.sample_rate as f64 / 2.0 {
            return Err(CorpusError::InvalidParam(format!(
                "highest harmonic {:.0} Hz reaches the Nyquist frequency",
                self.f0_range.1 * self.harmonics as f64
            )));
        }
        Ok(())
    }

    /// Draws a length and rounds it onto the boundary grid (at least one
    /// quantum).
    fn quantised<R: Rng>(&self, rng: &mut R, range: (f64, f64)) -> usize {
        let seconds = rng.gen_range(range.0..=range.1);
        let quanta = (seconds / self.boundary_quantum).round().max(1.0);
        (quanta * self.boundary_quantum * self.sample_rate as f64).round() as usize
    }
}

/// Generates `n` labelled utterances. Each gets its own stream seeded by
/// `derive_seed(seed, [index])`, so the corpus is reproducible and any subset
/// can be regenerated independently.
pub fn synth_corpus<T: Sample>(
    n: usize,
    config: &SynthConfig,
    seed: u64,
) -> Result<Vec<Utterance<T>>, CorpusError> {
    if n == 0 {
        return Err(CorpusError::EmptyCorpus("synthetic corpus"));
    }
    config.validate()?;
    (0..n)
        .map(|u| synth_utterance(u, config, derive_seed(seed, &[u as u64])))
        .collect()
}

fn synth_utterance<T: Sample>(
    index: usize,
    config: &SynthConfig,
    seed: u64,
) -> Result<Utterance<T>, CorpusError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = config.sample_rate as f64;
    let target = (rng.gen_range(config.duration_range.0..=config.duration_range.1) * rate)
        .round() as usize;

    let mut samples: Vec<T> = Vec::with_capacity(target);
    let mut segments = Vec::new();
    let mut voiced = false;
    while samples.len() < target {
        let range = if voiced {
            config.voiced_range
        } else {
            config.silence_range
        };
        let len = config.quantised(&mut rng, range);
        let len = len.min(target - samples.len());
        if voiced {
            let start = samples.len();
            render_voiced(&mut samples, len, config, &mut rng);
            segments.push((start as f64 / rate, (start + len) as f64 / rate));
        } else {
            samples.resize(samples.len() + len, T::zero());
        }
        voiced = !voiced;
    }

    Utterance::new(
        format!("synth-{index:04}"),
        Signal {
            samples,
            sample_rate: config.sample_rate,
        },
        LabelTrack::new(segments)?,
    )
}

/// Appends `len` samples of an amplitude-modulated harmonic stack with
/// raised-cosine edges.
fn render_voiced<T: Sample, R: Rng>(
    out: &mut Vec<T>,
    len: usize,
    config: &SynthConfig,
    rng: &mut R,
) {
    let rate = config.sample_rate as f64;
    let f0 = rng.gen_range(config.f0_range.0..=config.f0_range.1);
    let am_rate = rng.gen_range(config.am_rate_range.0..=config.am_rate_range.1);
    let am_phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let phases: Vec<f64> = (0..config.harmonics)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();

    // Scale so the envelope peak times the harmonic sum stays at `amplitude`.
    let harmonic_sum: f64 = (1..=config.harmonics).map(|k| 1.0 / k as f64).sum();
    let scale = config.amplitude / (harmonic_sum * (1.0 + config.am_depth));
    let ramp_samples = ((config.ramp * rate).round() as usize).min(len / 2);

    for i in 0..len {
        let t = i as f64 / rate;
        let mut s = 0.0;
        for (k, phase) in phases.iter().enumerate() {
            let f = f0 * (k + 1) as f64;
            s += (std::f64::consts::TAU * f * t + phase).sin() / (k + 1) as f64;
        }
        let env = 1.0 + config.am_depth * (std::f64::consts::TAU * am_rate * t + am_phase).sin();
        let fade = edge_fade(i, len, ramp_samples);
        out.push(T::of(scale * env * fade * s));
    }
}

fn edge_fade(i: usize, len: usize, ramp: usize) -> f64 {
    let distance = i.min(len - 1 - i);
    if ramp == 0 || distance >= ramp {
        return 1.0;
    }
    let x = (distance as f64 + 0.5) / ramp as f64;
    0.5 - 0.5 * (std::f64::consts::PI * x).cos()
}

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dsp::{DspError, NoiseKind, Signal};
use crate::num::Sample;

/// Frame-aligned boolean mask in sample units: frame `i` covers
/// `[i·hop, i·hop + frame_len)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameMask {
    pub flags: Vec<bool>,
    pub frame_len: usize,
    pub hop: usize,
}

impl FrameMask {
    pub fn new(flags: Vec<bool>, frame_len: usize, hop: usize) -> Result<Self, DspError> {
        if frame_len == 0 || hop == 0 {
            return Err(DspError::BadFrameGeometry { frame_len, hop });
        }
        Ok(FrameMask {
            flags,
            frame_len,
            hop,
        })
    }

    /// Sample ranges covered by true frames, merged where frames overlap or
    /// touch, clipped to `total_len`.
    pub fn active_spans(&self, total_len: usize) -> Vec<Range<usize>> {
        let mut spans: Vec<Range<usize>> = Vec::new();
        for (i, &on) in self.flags.iter().enumerate() {
            if !on {
                continue;
            }
            let start = (i * self.hop).min(total_len);
            let end = (i * self.hop + self.frame_len).min(total_len);
            if start >= end {
                continue;
            }
            match spans.last_mut() {
                Some(last) if start <= last.end => last.end = last.end.max(end),
                _ => spans.push(start..end),
            }
        }
        spans
    }
}

/// How to corrupt an utterance with noise.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MixSpec {
    /// Target speech-to-noise ratio in dB, measured over mask-true samples.
    pub snr_db: f64,
    pub noise: NoiseKind,
    pub seed: u64,
}

/// Mean squared value of `x` over the union of mask-true sample spans.
pub fn masked_mean_power<T: Sample>(x: &[T], mask: &FrameMask) -> Result<f64, DspError> {
    let spans = mask.active_spans(x.len());
    let count: usize = spans.iter().map(|s| s.len()).sum();
    if count == 0 {
        return Err(DspError::NoActiveFrames);
    }
    let sum: f64 = spans
        .iter()
        .flat_map(|s| &x[s.clone()])
        .map(|&v| {
            let v = v.as_f64();
            v * v
        })
        .sum();
    Ok(sum / count as f64)
}

/// Adds noise to speech at a target SNR.
///
/// Both powers are measured over the same mask-true sample spans (the
/// speech-bearing frames), so the achieved ratio of masked speech power to
/// masked scaled-noise power equals `spec.snr_db` exactly. The noise buffer
/// is tiled if it is shorter than the speech and truncated if longer; the
/// output has the speech's length.
pub fn mix_at_snr<T: Sample>(
    speech: &Signal<T>,
    noise: &Signal<T>,
    spec: &MixSpec,
    mask: &FrameMask,
) -> Result<Signal<T>, DspError> {
    if speech.sample_rate != noise.sample_rate {
        return Err(DspError::SampleRateMismatch {
            left: speech.sample_rate,
            right: noise.sample_rate,
        });
    }
    if !spec.snr_db.is_finite() {
        return Err(DspError::NonFinite("snr_db"));
    }
    if speech.is_empty() {
        return Err(DspError::EmptySignal("speech"));
    }
    if noise.is_empty() {
        return Err(DspError::EmptySignal("noise"));
    }

    let tiled: Vec<T> = noise
        .samples
        .iter()
        .cycle()
        .take(speech.len())
        .copied()
        .collect();

    let p_speech = masked_mean_power(&speech.samples, mask)?;
    let p_noise = masked_mean_power(&tiled, mask)?;
    if p_speech <= 0.0 {
        return Err(DspError::SilentReference("speech"));
    }
    if p_noise <= 0.0 {
        return Err(DspError::SilentReference("noise"));
    }

    let gain = T::of(10.0f64.powf(-spec.snr_db / 20.0) * (p_speech / p_noise).sqrt());
    let samples = speech
        .samples
        .iter()
        .zip(&tiled)
        .map(|(&s, &n)| s + gain * n)
        .collect();
    Ok(Signal {
        samples,
        sample_rate: speech.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::generate_noise;

    fn tone(len: usize, rate: u32) -> Signal<f64> {
        let samples = (0..len)
            .map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / rate as f64).sin())
            .collect();
        Signal::new(samples, rate).unwrap()
    }

    /// Re-measures the realised SNR from the ingredients (speech, scaled
    /// noise) rather than trusting the mixer's own arithmetic.
    fn realised_snr(speech: &Signal<f64>, mixed: &Signal<f64>, mask: &FrameMask) -> f64 {
        let added: Vec<f64> = mixed
            .samples
            .iter()
            .zip(&speech.samples)
            .map(|(m, s)| m - s)
            .collect();
        let ps = masked_mean_power(&speech.samples, mask).unwrap();
        let pn = masked_mean_power(&added, mask).unwrap();
        10.0 * (ps / pn).log10()
    }

    #[test]
    fn active_spans_merge_overlaps() {
        // Frames [0,400) and [160,560) overlap and merge.
        let mask = FrameMask::new(vec![true, true, true], 400, 160).unwrap();
        assert_eq!(mask.active_spans(2_000), vec![0..720]);
        // Frame 3 starts at 480, clear of frame 0's end: two spans.
        let mask = FrameMask::new(vec![true, false, false, true], 400, 160).unwrap();
        assert_eq!(mask.active_spans(2_000), vec![0..400, 480..880]);
        // Clipping to the signal length.
        assert_eq!(mask.active_spans(500), vec![0..400, 480..500]);
        assert_eq!(mask.active_spans(300), vec![0..300]);
    }

    #[test]
    fn masked_power_ignores_inactive_samples() {
        // Frame 0 holds 2.0s, frame 1 (inactive) holds 100.0s.
        let mut x = vec![2.0f64; 4];
        x.extend([100.0; 4]);
        let mask = FrameMask::new(vec![true, false], 4, 4).unwrap();
        assert_eq!(masked_mean_power(&x, &mask).unwrap(), 4.0);
    }

    #[test]
    fn snr_round_trip_is_exact() {
        let rate = 16_000;
        let speech = tone(16_000, rate);
        let noise = generate_noise(&NoiseKind::White, 16_000, rate, 9).unwrap();
        let flags: Vec<bool> = (0..98).map(|i| i % 3 != 0).collect();
        let mask = FrameMask::new(flags, 400, 160).unwrap();
        for snr in [-5.0, 0.0, 10.0, 20.0] {
            let spec = MixSpec {
                snr_db: snr,
                noise: NoiseKind::White,
                seed: 9,
            };
            let mixed = mix_at_snr(&speech, &noise, &spec, &mask).unwrap();
            assert_eq!(mixed.len(), speech.len());
            let got = realised_snr(&speech, &mixed, &mask);
            assert!((got - snr).abs() < 1e-9, "want {snr} dB, got {got} dB");
        }
    }

    #[test]
    fn short_noise_is_tiled() {
        let rate = 16_000;
        let speech = tone(10_000, rate);
        let noise = Signal::new(vec![0.5f64, -0.5, 0.25], rate).unwrap();
        let mask = FrameMask::new(vec![true; 61], 400, 160).unwrap();
        let spec = MixSpec {
            snr_db: 0.0,
            noise: NoiseKind::White,
            seed: 0,
        };
        let mixed = mix_at_snr(&speech, &noise, &spec, &mask).unwrap();
        // The added noise repeats with period 3.
        let added: Vec<f64> = mixed
            .samples
            .iter()
            .zip(&speech.samples)
            .map(|(m, s)| m - s)
            .collect();
        for i in 0..added.len() - 3 {
            assert!((added[i] - added[i + 3]).abs() < 1e-12);
        }
    }

    #[test]
    fn mixing_is_deterministic() {
        let rate = 16_000;
        let speech = tone(8_000, rate);
        let noise = generate_noise(&NoiseKind::White, 8_000, rate, 4).unwrap();
        let mask = FrameMask::new(vec![true; 48], 400, 160).unwrap();
        let spec = MixSpec {
            snr_db: 10.0,
            noise: NoiseKind::White,
            seed: 4,
        };
        let a = mix_at_snr(&speech, &noise, &spec, &mask).unwrap();
        let b = mix_at_snr(&speech, &noise, &spec, &mask).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn degenerate_masks_and_silence_are_errors() {
        let rate = 16_000;
        let speech = tone(8_000, rate);
        let noise = generate_noise(&NoiseKind::White, 8_000, rate, 4).unwrap();
        let spec = MixSpec {
            snr_db: 10.0,
            noise: NoiseKind::White,
            seed: 4,
        };
        let empty_mask = FrameMask::new(vec![false; 48], 400, 160).unwrap();
        assert!(matches!(
            mix_at_snr(&speech, &noise, &spec, &empty_mask),
            Err(DspError::NoActiveFrames)
        ));
        let silence = Signal::new(vec![0.0f64; 8_000], rate).unwrap();
        let mask = FrameMask::new(vec![true; 48], 400, 160).unwrap();
        assert!(matches!(
            mix_at_snr(&silence, &noise, &spec, &mask),
            Err(DspError::SilentReference("speech"))
        ));
        assert!(FrameMask::new(vec![true], 0, 160).is_err());
    }
}

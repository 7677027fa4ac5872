use super::features::{FrameSpec, ENERGY_FLOOR_DB};
use super::VadError;
use crate::dsp::Signal;
use crate::num::Sample;

/// Untrained baseline: a frame is speech when its energy rises more than
/// `threshold_db` above the noise floor, estimated as the 10th percentile
/// (nearest rank) of the frame energies. `-∞` accepts every frame.
pub fn energy_vad<T: Sample>(
    signal: &Signal<T>,
    spec: &FrameSpec,
    threshold_db: f64,
) -> Result<Vec<bool>, VadError> {
    if threshold_db.is_nan() {
        return Err(VadError::NonFinite("threshold_db"));
    }
    spec.validate()?;
    let frame = spec.frame_samples(signal.sample_rate);
    let hop = spec.hop_samples(signal.sample_rate);
    if signal.samples.len() < frame || frame == 0 {
        return Err(VadError::SignalTooShort {
            samples: signal.samples.len(),
            frame,
        });
    }
    let n_frames = (signal.samples.len() - frame) / hop + 1;
    let energies: Vec<f64> = (0..n_frames)
        .map(|i| {
            let fr = &signal.samples[i * hop..i * hop + frame];
            let power = fr.iter().map(|s| s.as_f64() * s.as_f64()).sum::<f64>() / frame as f64;
            (10.0 * power.log10()).max(ENERGY_FLOOR_DB)
        })
        .collect();

    let mut sorted = energies.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let floor = sorted[(n_frames - 1) / 10];

    Ok(energies.iter().map(|&e| e > floor + threshold_db).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthConfig};
    use crate::vad::frame_labels;

    #[test]
    fn synthetic_contrast_yields_high_frame_accuracy() {
        let cfg = SynthConfig::default();
        let spec = FrameSpec::default();
        for utt in synth_corpus::<f64>(5, &cfg, 29).unwrap() {
            let decisions = energy_vad(&utt.signal, &spec, 10.0).unwrap();
            let truth = frame_labels(
                &utt.labels,
                &spec,
                utt.signal.sample_rate,
                decisions.len(),
            );
            let correct = decisions
                .iter()
                .zip(&truth)
                .filter(|(d, t)| d == t)
                .count();
            let accuracy = correct as f64 / truth.len() as f64;
            assert!(accuracy >= 0.9, "frame accuracy {accuracy}");
        }
    }

    #[test]
    fn silence_is_never_speech() {
        let sig = Signal {
            samples: vec![0.0f64; 16_000],
            sample_rate: 16_000,
        };
        let decisions = energy_vad(&sig, &FrameSpec::default(), 10.0).unwrap();
        assert!(decisions.iter().all(|&d| !d));
    }

    #[test]
    fn degenerate_threshold_accepts_everything() {
        let sig = Signal {
            samples: vec![0.0f64; 16_000],
            sample_rate: 16_000,
        };
        let decisions = energy_vad(&sig, &FrameSpec::default(), f64::NEG_INFINITY).unwrap();
        assert!(decisions.iter().all(|&d| d));
        assert!(energy_vad(&sig, &FrameSpec::default(), f64::NAN).is_err());
    }
}

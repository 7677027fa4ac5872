use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::{DspError, Signal};
use crate::num::Sample;

/// Noise source for augmentation mixing.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    /// I.i.d. standard Gaussian samples.
    White,
    /// White noise shaped to a power-law spectrum; e.g. −3 dB/octave is
    /// pink-ish, −6 dB/octave brown-ish. Normalised to unit variance.
    Colored { slope_db_per_octave: f64 },
    /// A recorded noise file, resolved (read and tiled) by the corpus layer.
    File { path: PathBuf },
}

/// Synthesises `len` samples of noise. [`NoiseKind::File`] cannot be
/// synthesised; callers that accept file noise must resolve it to a buffer
/// before reaching this point.
pub fn generate_noise<T: Sample>(
    kind: &NoiseKind,
    len: usize,
    sample_rate: u32,
    seed: u64,
) -> Result<Signal<T>, DspError> {
    if len == 0 {
        return Err(DspError::EmptySignal("noise"));
    }
    if sample_rate == 0 {
        return Err(DspError::ZeroSampleRate);
    }
    match kind {
        NoiseKind::White => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = (0..len)
                .map(|_| T::of(StandardNormal.sample(&mut rng)))
                .collect();
            Ok(Signal {
                samples,
                sample_rate,
            })
        }
        NoiseKind::Colored {
            slope_db_per_octave,
        } => colored_noise(*slope_db_per_octave, len, sample_rate, seed),
        NoiseKind::File { path } => Err(DspError::UnresolvedFileNoise { path: path.clone() }),
    }
}

/// FFT-domain shaping: multiply a white spectrum by `f^(γ/2)` so that power
/// falls (or rises) by `slope_db_per_octave` per frequency doubling, then
/// normalise to unit variance. The DC bin is zeroed, so the output has
/// exactly zero mean over the FFT length.
fn colored_noise<T: Sample>(
    slope_db_per_octave: f64,
    len: usize,
    sample_rate: u32,
    seed: u64,
) -> Result<Signal<T>, DspError> {
    if !slope_db_per_octave.is_finite() {
        return Err(DspError::NonFinite("spectral slope"));
    }
    // Power ∝ f^γ with γ chosen so a doubling of f changes power by the
    // requested number of dB: γ = slope / (10·log10(2)).
    let gamma = slope_db_per_octave / (10.0 * std::f64::consts::LOG10_2);

    let fft_len = len.next_power_of_two().max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex<f64>> = (0..fft_len)
        .map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(fft_len).process(&mut buf);

    let f_ref = 1_000.0f64.min(sample_rate as f64 / 4.0);
    for (k, slot) in buf.iter_mut().enumerate() {
        if k == 0 {
            *slot = Complex::new(0.0, 0.0);
            continue;
        }
        // Symmetric gain keeps the inverse transform real.
        let bin = k.min(fft_len - k);
        let f = bin as f64 * sample_rate as f64 / fft_len as f64;
        let gain = (f / f_ref).powf(gamma / 2.0);
        *slot *= gain;
    }
    planner.plan_fft_inverse(fft_len).process(&mut buf);

    let raw: Vec<f64> = buf.iter().take(len).map(|c| c.re).collect();
    let mean = raw.iter().sum::<f64>() / len as f64;
    let var = raw.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / len as f64;
    if var <= 0.0 {
        return Err(DspError::NonFinite("colored noise variance"));
    }
    let scale = 1.0 / var.sqrt();
    Ok(Signal {
        samples: raw.iter().map(|&x| T::of((x - mean) * scale)).collect(),
        sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex;
    use rustfft::FftPlanner;

    /// Averaged-periodogram slope estimate in dB/octave over `f_lo..f_hi`,
    /// the oracle for the coloring filter.
    fn measured_slope(x: &[f64], sample_rate: u32, f_lo: f64, f_hi: f64) -> f64 {
        let seg = 4_096;
        let n_seg = x.len() / seg;
        assert!(n_seg >= 16, "need enough segments for a stable estimate");
        let mut power = vec![0.0f64; seg / 2];
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(seg);
        for s in 0..n_seg {
            let mut buf: Vec<Complex<f64>> = x[s * seg..(s + 1) * seg]
                .iter()
                .map(|&v| Complex::new(v, 0.0))
                .collect();
            fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p += c.norm_sqr();
            }
        }
        // Least squares of 10·log10(P) against log2(f).
        let pts: Vec<(f64, f64)> = (1..seg / 2)
            .filter_map(|k| {
                let f = k as f64 * sample_rate as f64 / seg as f64;
                ((f_lo..=f_hi).contains(&f))
                    .then(|| (f.log2(), 10.0 * (power[k] / n_seg as f64).log10()))
            })
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (sxx, sxy) = pts
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p.0 * p.0, b + p.0 * p.1));
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn white_noise_moments() {
        let n = 1_000_000;
        let s: Signal<f64> = generate_noise(&NoiseKind::White, n, 16_000, 42).unwrap();
        let mean = s.samples.iter().sum::<f64>() / n as f64;
        let var = s.samples.iter().map(|x| x * x).sum::<f64>() / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn white_noise_is_flat() {
        let s: Signal<f64> = generate_noise(&NoiseKind::White, 1 << 18, 16_000, 3).unwrap();
        let slope = measured_slope(&s.samples, 16_000, 100.0, 4_000.0);
        assert!(slope.abs() < 0.25, "white slope {slope}");
    }

    #[test]
    fn colored_noise_hits_requested_slope() {
        for want in [-6.0, -3.0, 3.0] {
            let kind = NoiseKind::Colored {
                slope_db_per_octave: want,
            };
            let s: Signal<f64> = generate_noise(&kind, 1 << 18, 16_000, 7).unwrap();
            let got = measured_slope(&s.samples, 16_000, 100.0, 4_000.0);
            assert!((got - want).abs() < 0.5, "want {want}, got {got}");
            let var = s.samples.iter().map(|x| x * x).sum::<f64>() / s.len() as f64;
            assert!((var - 1.0).abs() < 0.05, "variance {var}");
        }
    }

    #[test]
    fn generation_is_deterministic_in_seed() {
        let kind = NoiseKind::Colored {
            slope_db_per_octave: -3.0,
        };
        let a: Signal<f64> = generate_noise(&kind, 10_000, 16_000, 5).unwrap();
        let b: Signal<f64> = generate_noise(&kind, 10_000, 16_000, 5).unwrap();
        assert_eq!(a.samples, b.samples);
        let c: Signal<f64> = generate_noise(&kind, 10_000, 16_000, 6).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn file_noise_is_not_synthesisable() {
        let kind = NoiseKind::File {
            path: "babble.wav".into(),
        };
        assert!(matches!(
            generate_noise::<f64>(&kind, 10, 16_000, 0),
            Err(DspError::UnresolvedFileNoise { .. })
        ));
    }

    #[test]
    fn noise_kind_serde_round_trip() {
        let kinds = [
            NoiseKind::White,
            NoiseKind::Colored {
                slope_db_per_octave: -3.0,
            },
            NoiseKind::File {
                path: "n.wav".into(),
            },
        ];
        for kind in kinds {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(serde_json::from_str::<NoiseKind>(&json).unwrap(), kind);
        }
    }
}

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::dsp::{DspError, Signal};
use crate::num::Sample;

/// Fast convolution of a signal with a fixed kernel, FFT overlap-add.
///
/// The kernel spectrum and FFT plans are computed once, so convolving many
/// signals with the same impulse response amortises the setup.
pub struct FftConvolver<T: Sample> {
    kernel_len: usize,
    fft_len: usize,
    block_len: usize,
    kernel_spectrum: Vec<Complex<T>>,
    fft: Arc<dyn Fft<T>>,
    ifft: Arc<dyn Fft<T>>,
}

impl<T: Sample> FftConvolver<T> {
    pub fn new(kernel: &[T]) -> Result<Self, DspError> {
        if kernel.is_empty() {
            return Err(DspError::EmptySignal("kernel"));
        }
        if kernel.iter().any(|s| !s.is_finite()) {
            return Err(DspError::NonFinite("kernel"));
        }
        let fft_len = (2 * kernel.len()).max(2_048).next_power_of_two();
        let block_len = fft_len - kernel.len() + 1;

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(fft_len);
        let ifft = planner.plan_fft_inverse(fft_len);

        let mut kernel_spectrum = vec![Complex::new(T::zero(), T::zero()); fft_len];
        for (slot, &k) in kernel_spectrum.iter_mut().zip(kernel) {
            slot.re = k;
        }
        fft.process(&mut kernel_spectrum);

        Ok(FftConvolver {
            kernel_len: kernel.len(),
            fft_len,
            block_len,
            kernel_spectrum,
            fft,
            ifft,
        })
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel_len
    }

    /// Full linear convolution: output length `x.len() + kernel_len - 1`.
    pub fn convolve(&self, x: &[T]) -> Vec<T> {
        if x.is_empty() {
            return Vec::new();
        }
        let out_len = x.len() + self.kernel_len - 1;
        let mut out = vec![T::zero(); out_len];
        let scale = T::one() / T::of(self.fft_len as f64);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.fft_len];

        for (block_idx, block) in x.chunks(self.block_len).enumerate() {
            for slot in buf.iter_mut() {
                *slot = Complex::new(T::zero(), T::zero());
            }
            for (slot, &s) in buf.iter_mut().zip(block) {
                slot.re = s;
            }
            self.fft.process(&mut buf);
            for (slot, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
                *slot *= *k;
            }
            self.ifft.process(&mut buf);

            let start = block_idx * self.block_len;
            let take = (out_len - start).min(self.fft_len);
            for (slot, value) in out[start..start + take].iter_mut().zip(&buf) {
                *slot += value.re * scale;
            }
        }
        out
    }
}

/// One-shot linear convolution of two sample buffers.
pub fn convolve_samples<T: Sample>(x: &[T], h: &[T]) -> Result<Vec<T>, DspError> {
    if x.is_empty() {
        return Err(DspError::EmptySignal("signal"));
    }
    Ok(FftConvolver::new(h)?.convolve(x))
}

/// Linear convolution of two signals; sample rates must match.
pub fn convolve<T: Sample>(x: &Signal<T>, h: &Signal<T>) -> Result<Signal<T>, DspError> {
    if x.sample_rate != h.sample_rate {
        return Err(DspError::SampleRateMismatch {
            left: x.sample_rate,
            right: h.sample_rate,
        });
    }
    Ok(Signal {
        samples: convolve_samples(&x.samples, &h.samples)?,
        sample_rate: x.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Schoolbook convolution, the oracle the FFT path is checked against.
    fn direct_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len() + h.len() - 1];
        for (i, &xi) in x.iter().enumerate() {
            for (j, &hj) in h.iter().enumerate() {
                out[i + j] += xi * hj;
            }
        }
        out
    }

    #[test]
    fn known_small_case() {
        let got = convolve_samples::<f64>(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        let want = [4.0, 13.0, 28.0, 27.0, 18.0];
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "{got:?}");
        }
    }

    #[test]
    fn unit_impulse_is_identity() {
        let x: Vec<f64> = (0..500).map(|i| (i as f64 * 0.1).sin()).collect();
        let got = convolve_samples(&x, &[1.0]).unwrap();
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (nx, nh) in [(1, 1), (7, 3), (100, 257), (5_000, 1_024), (3_001, 4_096)] {
            let x: Vec<f64> = (0..nx).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..nh).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = convolve_samples(&x, &h).unwrap();
            let want = direct_convolve(&x, &h);
            assert_eq!(got.len(), nx + nh - 1);
            let scale: f64 = want.iter().map(|w| w.abs()).fold(1.0, f64::max);
            for (i, (g, w)) in got.iter().zip(&want).enumerate() {
                assert!(
                    (g - w).abs() / scale < 1e-12,
                    "nx={nx} nh={nh} sample {i}: {g} vs {w}"
                );
            }
        }
    }

    #[test]
    fn f32_path_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f32> = (0..800).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let h: Vec<f32> = (0..300).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let got = convolve_samples(&x, &h).unwrap();
        let want = direct_convolve(
            &x.iter().map(|&v| v as f64).collect::<Vec<_>>(),
            &h.iter().map(|&v| v as f64).collect::<Vec<_>>(),
        );
        for (g, w) in got.iter().zip(&want) {
            assert!((*g as f64 - w).abs() < 1e-3);
        }
    }

    #[test]
    fn reusing_a_convolver_is_consistent() {
        let h: Vec<f64> = (0..64).map(|i| (-0.1 * i as f64).exp()).collect();
        let conv = FftConvolver::new(&h).unwrap();
        let x: Vec<f64> = (0..1_000).map(|i| ((i % 37) as f64) / 37.0).collect();
        assert_eq!(conv.convolve(&x), conv.convolve(&x));
        assert_eq!(conv.convolve(&x), convolve_samples(&x, &h).unwrap());
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(convolve_samples::<f64>(&[], &[1.0]).is_err());
        assert!(convolve_samples::<f64>(&[1.0], &[]).is_err());
    }

    #[test]
    fn rate_mismatch_is_rejected() {
        let a = Signal::new(vec![1.0f64; 10], 16_000).unwrap();
        let b = Signal::new(vec![1.0f64; 10], 8_000).unwrap();
        assert!(matches!(
            convolve(&a, &b),
            Err(DspError::SampleRateMismatch { .. })
        ));
    }
}

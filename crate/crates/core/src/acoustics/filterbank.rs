//! Octave-band analysis filters built as low-pass differences.
//!
//! Bands telescope: band 0 is `LP(e₁)`, interior bands are
//! `LP(eᵢ₊₁) − LP(eᵢ)`, and the top band is `δ − LP(e_last)`, so the bank
//! sums to a unit impulse *exactly* and splitting a signal into bands and
//! summing them back reconstructs it (up to the shared linear-phase delay,
//! which [`FilterBank::mix_bands`] compensates).

use crate::acoustics::AcousticsError;
use crate::dsp::FftConvolver;
use crate::num::Sample;

/// Standard octave centres covering speech-band absorption tables.
pub const DEFAULT_BAND_CENTERS_HZ: [f64; 6] = [125.0, 250.0, 500.0, 1_000.0, 2_000.0, 4_000.0];

/// Linear-phase low-pass: Blackman-windowed sinc, odd `taps`, unit DC gain,
/// group delay `taps/2` samples.
pub fn low_pass_kernel<T: Sample>(cutoff_hz: f64, sample_rate: u32, taps: usize) -> Vec<T> {
    assert!(taps >= 3 && taps % 2 == 1, "taps must be odd and ≥ 3");
    assert!(cutoff_hz > 0.0 && cutoff_hz < sample_rate as f64 / 2.0);
    let mid = (taps / 2) as f64;
    let fc = cutoff_hz / sample_rate as f64;
    let mut kernel = Vec::with_capacity(taps);
    let mut sum = 0.0;
    for i in 0..taps {
        let u = i as f64 - mid;
        let x = 2.0 * std::f64::consts::PI * fc * u;
        let sinc = if u == 0.0 { 1.0 } else { x.sin() / x };
        let w = 2.0 * std::f64::consts::PI * i as f64 / (taps - 1) as f64;
        let blackman = 0.42 - 0.5 * w.cos() + 0.08 * (2.0 * w).cos();
        let v = 2.0 * fc * sinc * blackman;
        sum += v;
        kernel.push(v);
    }
    kernel.iter().map(|&v| T::of(v / sum)).collect()
}

pub struct FilterBank<T> {
    kernels: Vec<Vec<T>>,
    centers: Vec<f64>,
    taps: usize,
}

impl<T: Sample> FilterBank<T> {
    /// Builds band kernels for the given centre frequencies. Interior band
    /// edges are the geometric means of neighbouring centres and must stay
    /// below Nyquist; the bottom band reaches down to DC and the top band up
    /// to Nyquist, so the bank partitions the whole spectrum.
    pub fn new(
        centers: &[f64],
        sample_rate: u32,
        taps: usize,
    ) -> Result<Self, AcousticsError> {
        if centers.is_empty() {
            return Err(AcousticsError::InvalidParam {
                what: "band_centers_hz",
                value: 0.0,
            });
        }
        if taps < 3 || taps % 2 == 0 {
            return Err(AcousticsError::InvalidParam {
                what: "filter_taps",
                value: taps as f64,
            });
        }
        let nyquist = sample_rate as f64 / 2.0;
        let mut edges = Vec::with_capacity(centers.len().saturating_sub(1));
        for pair in centers.windows(2) {
            if pair[1] <= pair[0] {
                return Err(AcousticsError::BandsNotIncreasing);
            }
            let edge = (pair[0] * pair[1]).sqrt();
            if edge >= nyquist {
                return Err(AcousticsError::BandAboveNyquist { edge, nyquist });
            }
            edges.push(edge);
        }
        if centers[0] <= 0.0 {
            return Err(AcousticsError::InvalidParam {
                what: "band_centers_hz",
                value: centers[0],
            });
        }

        let mid = taps / 2;
        let mut delta = vec![T::zero(); taps];
        delta[mid] = T::one();

        let low_passes: Vec<Vec<T>> = edges
            .iter()
            .map(|&e| low_pass_kernel(e, sample_rate, taps))
            .collect();
        let mut kernels = Vec::with_capacity(centers.len());
        for band in 0..centers.len() {
            let upper = low_passes.get(band).unwrap_or(&delta);
            let lower = band.checked_sub(1).map(|b| &low_passes[b]);
            let kernel = upper
                .iter()
                .enumerate()
                .map(|(i, &u)| u - lower.map_or(T::zero(), |l| l[i]))
                .collect();
            kernels.push(kernel);
        }
        Ok(FilterBank {
            kernels,
            centers: centers.to_vec(),
            taps,
        })
    }

    pub fn n_bands(&self) -> usize {
        self.kernels.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn kernels(&self) -> &[Vec<T>] {
        &self.kernels
    }

    /// Group delay of every band kernel, in samples.
    pub fn group_delay(&self) -> usize {
        self.taps / 2
    }

    /// Filters `bands[i]` with kernel `i`, sums, and removes the shared
    /// group delay; the output has `out_len` samples.
    pub fn mix_bands(&self, bands: &[Vec<T>], out_len: usize) -> Vec<T> {
        assert_eq!(bands.len(), self.kernels.len());
        let gd = self.group_delay();
        let mut out = vec![T::zero(); out_len];
        for (band, kernel) in bands.iter().zip(&self.kernels) {
            if band.iter().all(|v| v.is_zero()) {
                continue;
            }
            let filtered = FftConvolver::new(kernel)
                .expect("kernel is non-empty and finite")
                .convolve(band);
            for (slot, &v) in out.iter_mut().zip(filtered[gd..].iter()) {
                *slot += v;
            }
        }
        out
    }
}

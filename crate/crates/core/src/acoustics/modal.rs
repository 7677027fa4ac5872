//! Low-frequency modal synthesis crossed over into the banded image model.
//!
//! Below a few hundred hertz, small rooms respond as a sparse set of standing
//! waves that geometric (image/ray) models miss entirely. This model sums the
//! analytic rigid-box modes up to a margin above the crossover frequency,
//! damps them at the Eyring rate, and splices the result under the
//! angle/frequency-dependent image model: `out = LP(modal) + (δ − LP)(banded)`
//! with a shared linear-phase low-pass at the crossover, so the two bands
//! stay time-aligned and sum without spectral holes.
//!
//! Modes are synthesised at a decimated rate (the largest power-of-two
//! divisor of the sample rate that keeps ≥ 4 samples per cycle of the highest
//! mode) and zero-stuff upsampled through the same low-pass.

use crate::acoustics::banded;
use crate::acoustics::filterbank::low_pass_kernel;
use crate::acoustics::{
    mean_alpha, surface_alphas, AcousticsError, ModalParams, SimParams,
};
use crate::dsp::FftConvolver;
use crate::geometry::{Scenario, Vec3};
use crate::num::Sample;
use rustfft::num_complex::Complex;

pub(crate) fn simulate<T: Sample>(
    scenario: &Scenario<T>,
    p: &ModalParams,
    params: &SimParams,
    n_samples: usize,
) -> Result<Vec<T>, AcousticsError> {
    let dims = scenario
        .room
        .shoebox_dims()
        .ok_or(AcousticsError::ModalNeedsShoebox)?;
    let fs = params.sample_rate as f64;
    let c = params.speed_of_sound;
    let f_max = p.crossover_hz * p.max_mode_freq_factor;
    if f_max >= 0.45 * fs {
        return Err(AcousticsError::InvalidParam {
            what: "crossover_hz (modal band reaches Nyquist)",
            value: p.crossover_hz,
        });
    }

    // Geometric part, high-passed above the crossover.
    let full = banded::simulate(scenario, &p.banded, params, n_samples)?;
    let lp: Vec<T> = low_pass_kernel(p.crossover_hz, params.sample_rate, p.banded.filter_taps);
    let gd = p.banded.filter_taps / 2;
    let low = FftConvolver::new(&lp)
        .expect("low-pass kernel is non-empty and finite")
        .convolve(&full);
    let mut out: Vec<T> = (0..n_samples).map(|i| full[i] - low[i + gd]).collect();

    // Decimation factor for modal synthesis.
    let mut k = 16u32;
    while k > 1 && !(params.sample_rate % k == 0 && fs / k as f64 >= 4.0 * f_max) {
        k /= 2;
    }
    let fs_low = fs / k as f64;
    let k = k as usize;

    let (lx, ly, lz) = (dims.x.as_f64(), dims.y.as_f64(), dims.z.as_f64());
    let alphas = surface_alphas(&scenario.room, scenario.rt60_target.as_f64(), c, 1)?;
    let alpha_bar = mean_alpha(&scenario.room, &alphas, 0);
    let (area, volume) = scenario.room.surface_and_volume();
    let (area, volume) = (area.as_f64(), volume.as_f64());
    // Amplitude (half the energy) decay rate at the Eyring reverberation time.
    let damping = c * area * (-(1.0 - alpha_bar).ln()) / (8.0 * volume);

    let src = Vec3::<f64>::from_f64(scenario.source.to_f64());
    let rcv = Vec3::<f64>::from_f64(scenario.receiver.to_f64());
    let psi = |n: [usize; 3], pt: Vec3<f64>| -> f64 {
        let axis = |ni: usize, x: f64, l: f64| (ni as f64 * std::f64::consts::PI * x / l).cos();
        axis(n[0], pt.x, lx) * axis(n[1], pt.y, ly) * axis(n[2], pt.z, lz)
    };

    let m_len = n_samples.div_ceil(k);
    let mut g = vec![0.0f64; m_len];
    let mode_freq = |n: [usize; 3]| -> f64 {
        0.5 * c
            * ((n[0] as f64 / lx).powi(2)
                + (n[1] as f64 / ly).powi(2)
                + (n[2] as f64 / lz).powi(2))
            .sqrt()
    };
    let n_cap = |l: f64| (2.0 * f_max * l / c).floor() as usize;
    for nx in 0..=n_cap(lx) {
        if mode_freq([nx, 0, 0]) > f_max {
            break;
        }
        for ny in 0..=n_cap(ly) {
            if mode_freq([nx, ny, 0]) > f_max {
                break;
            }
            for nz in 0..=n_cap(lz) {
                let n = [nx, ny, nz];
                if nx == 0 && ny == 0 && nz == 0 {
                    continue;
                }
                let f_n = mode_freq(n);
                if f_n > f_max {
                    break;
                }
                let lambda: f64 = n
                    .iter()
                    .map(|&ni| if ni == 0 { 1.0 } else { 0.5 })
                    .product();
                let amp = c * c * psi(n, src) * psi(n, rcv)
                    / (volume * lambda * 2.0 * std::f64::consts::PI * f_n);
                if amp == 0.0 {
                    continue;
                }
                // zₘ = e^((−δ + iω)·m/fs_low); Im zₘ = e^(−δt)·sin(ωt).
                let step = Complex::from_polar(
                    (-damping / fs_low).exp(),
                    2.0 * std::f64::consts::PI * f_n / fs_low,
                );
                let mut z = Complex::new(1.0, 0.0);
                for gm in g.iter_mut() {
                    *gm += amp * z.im;
                    z *= step;
                }
            }
        }
    }

    // Zero-stuff upsample (gain k restores the DC level), then confine the
    // modal part below the crossover with the same filter as above.
    let mut up = vec![T::zero(); n_samples];
    for (m, &gm) in g.iter().enumerate() {
        if m * k < n_samples {
            up[m * k] = T::of(gm * k as f64);
        }
    }
    let low_modal = FftConvolver::new(&lp)
        .expect("low-pass kernel is non-empty and finite")
        .convolve(&up);
    for (i, slot) in out.iter_mut().enumerate() {
        *slot += low_modal[i + gd];
    }
    Ok(out)
}

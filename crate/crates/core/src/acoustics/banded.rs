//! Image-source model with angle- and frequency-dependent wall reflection.
//!
//! Each image arrival carries the incidence cosine at every wall it crossed,
//! so instead of one energy factor per bounce we apply a locally-reacting
//! reflection coefficient per octave band and per incidence angle, build one
//! broadband impulse skeleton per band, and recombine the skeletons through
//! the analysis filter bank.

use crate::acoustics::filterbank::FilterBank;
use crate::acoustics::image::for_each_image;
use crate::acoustics::pulse::{place_pulse, PULSE_HALF_WIDTH};
use crate::acoustics::{surface_alphas, AcousticsError, BandedParams, SimParams};
use crate::geometry::Scenario;
use crate::num::Sample;

/// Plane-wave reflection coefficient of a locally-reacting surface with
/// random-incidence absorption `alpha`, at incidence cosine `cos_theta`
/// (1 = normal incidence, 0 = grazing).
///
/// The surface impedance is recovered from the normal-incidence coefficient
/// `R₀ = √(1−α)` as `ζ = (1+R₀)/(1−R₀)`, giving
/// `R(θ) = (ζ·cosθ − 1)/(ζ·cosθ + 1)`. Near grazing this expression turns
/// negative (a pressure-node artefact of the local-reaction assumption); we
/// clamp at zero so reflected energy never grows with absorption and a fully
/// absorbing wall (`α = 1`) reflects nothing at any angle.
pub fn reflection_coefficient<T: Sample>(alpha: T, cos_theta: T) -> T {
    let a = alpha.as_f64().clamp(0.0, 1.0);
    let cos = cos_theta.as_f64().clamp(0.0, 1.0);
    if a <= 1e-12 {
        return T::one();
    }
    let r0 = (1.0 - a).sqrt();
    if r0 <= 1e-12 {
        return T::zero();
    }
    let zeta = (1.0 + r0) / (1.0 - r0);
    T::of(((zeta * cos - 1.0) / (zeta * cos + 1.0)).max(0.0))
}

pub(crate) fn simulate<T: Sample>(
    scenario: &Scenario<T>,
    p: &BandedParams,
    params: &SimParams,
    n_samples: usize,
) -> Result<Vec<T>, AcousticsError> {
    let bank: FilterBank<T> =
        FilterBank::new(&p.band_centers_hz, params.sample_rate, p.filter_taps)?;
    let n_bands = bank.n_bands();
    let alphas = surface_alphas(
        &scenario.room,
        scenario.rt60_target.as_f64(),
        params.speed_of_sound,
        n_bands,
    )?;

    let fs = params.sample_rate as f64;
    let c = params.speed_of_sound;
    // Arrivals whose pulse would start past the buffer cannot contribute.
    let max_distance = c * (n_samples as f64 + PULSE_HALF_WIDTH as f64) / fs;

    let mut skeletons = vec![vec![T::zero(); n_samples]; n_bands];
    let mut band_amps = vec![0.0f64; n_bands];
    for_each_image(
        &scenario.room,
        scenario.source,
        scenario.receiver,
        p.max_order,
        max_distance,
        |arrival| {
            let base = 1.0 / (4.0 * std::f64::consts::PI * arrival.distance);
            let t0 = arrival.distance / c * fs;
            band_amps.iter_mut().for_each(|a| *a = base);
            for hit in arrival.hits {
                for (band, amp) in band_amps.iter_mut().enumerate() {
                    if *amp == 0.0 {
                        continue;
                    }
                    let r = reflection_coefficient(alphas[hit.surface][band], hit.cos_incidence)
                        .as_f64();
                    *amp *= r.powi(hit.count as i32);
                }
            }
            for (band, &amp) in band_amps.iter().enumerate() {
                if amp != 0.0 {
                    place_pulse(&mut skeletons[band], t0, amp);
                }
            }
        },
    );

    Ok(bank.mix_bands(&skeletons, n_samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::simulate_rir;
    use crate::acoustics::{ImageParams, RirModel};
    use crate::geometry::{Absorption, AbsorptionSpec, Room, Vec3};

    fn refl(alpha: f64, cos: f64) -> f64 {
        reflection_coefficient(alpha, cos)
    }

    #[test]
    fn normal_incidence_matches_the_energy_coefficient() {
        for &alpha in &[0.05, 0.2, 0.5, 0.9] {
            let want = (1.0f64 - alpha).sqrt();
            assert!((refl(alpha, 1.0) - want).abs() < 1e-12, "alpha {alpha}");
        }
    }

    #[test]
    fn limits_are_total_reflection_and_total_absorption() {
        for &cos in &[0.0, 0.3, 0.7, 1.0] {
            assert_eq!(refl(0.0, cos), 1.0);
            assert_eq!(refl(1.0, cos), 0.0);
        }
    }

    #[test]
    fn grazing_incidence_clamps_to_zero() {
        // ζcosθ < 1 makes the raw coefficient negative; it must clamp.
        assert_eq!(refl(0.9, 0.05), 0.0);
        assert_eq!(refl(0.5, 0.0), 0.0);
    }

    #[test]
    fn coefficient_is_monotone_in_alpha_and_angle() {
        let cosines = [0.1, 0.3, 0.5, 0.8, 1.0];
        for &cos in &cosines {
            let mut prev = f64::INFINITY;
            for step in 0..=20 {
                let alpha = step as f64 / 20.0;
                let r = refl(alpha, cos);
                assert!(r <= prev + 1e-12, "alpha {alpha} cos {cos}");
                prev = r;
            }
        }
        for &alpha in &[0.1, 0.4, 0.8] {
            let mut prev = -f64::INFINITY;
            for step in 0..=20 {
                let cos = step as f64 / 20.0;
                let r = refl(alpha, cos);
                assert!(r >= prev - 1e-12, "alpha {alpha} cos {cos}");
                prev = r;
            }
        }
    }

    fn scenario(alpha: AbsorptionSpec<f64>) -> Scenario<f64> {
        let room = Room::shoebox(Vec3::new(6.0, 4.0, 3.0), alpha).unwrap();
        Scenario {
            id: "banded-test".into(),
            room,
            source: Vec3::new(1.0, 2.0, 1.5),
            receiver: Vec3::new(4.0, 1.0, 1.2),
            rt60_target: 0.5,
            seed: 7,
        }
    }

    #[test]
    fn perfectly_absorbing_room_keeps_only_the_direct_path() {
        let sc = scenario(AbsorptionSpec::Uniform(Absorption::Scalar(1.0)));
        let params = SimParams::default();
        let rir = simulate_rir(
            &sc,
            &RirModel::BandedReflection(BandedParams {
                max_order: Some(3),
                ..BandedParams::default()
            }),
            &params,
        )
        .unwrap();
        let d = sc.source.distance(sc.receiver);
        let direct = (d / params.speed_of_sound * params.sample_rate as f64) as usize;
        let peak = rir.samples.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let late: f64 = rir.samples[direct + 600..]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        // All reflected energy dies at the walls; only filter-bank ringing
        // around the direct pulse remains.
        assert!(late < 1e-6 * peak, "late {late} vs peak {peak}");
    }

    #[test]
    fn uniform_band_absorption_reduces_to_a_single_analysis_band() {
        // With identical absorption in every band, the six per-band skeletons
        // are identical, and because the bank telescopes to a delta the
        // result must equal a single-band run sample for sample.
        let sc = scenario(AbsorptionSpec::Uniform(Absorption::Scalar(0.3)));
        let params = SimParams {
            rir_seconds: Some(0.25),
            ..SimParams::default()
        };
        let six = simulate_rir(
            &sc,
            &RirModel::BandedReflection(BandedParams {
                max_order: Some(4),
                ..BandedParams::default()
            }),
            &params,
        )
        .unwrap();
        let one = simulate_rir(
            &sc,
            &RirModel::BandedReflection(BandedParams {
                band_centers_hz: vec![1_000.0],
                max_order: Some(4),
                filter_taps: 511,
            }),
            &params,
        )
        .unwrap();
        assert_eq!(six.samples.len(), one.samples.len());
        let peak = one.samples.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (i, (a, b)) in six.samples.iter().zip(&one.samples).enumerate() {
            assert!((a - b).abs() < 1e-9 * peak, "sample {i}: {a} vs {b}");
        }
    }

    #[test]
    fn more_absorptive_bands_hold_less_energy() {
        // Low bands nearly rigid, high bands absorbent: reverberant energy
        // above 2.8 kHz must fall well below the energy under 180 Hz once the
        // direct sound is excluded.
        let bands = vec![0.02, 0.05, 0.1, 0.3, 0.6, 0.9];
        let sc = scenario(AbsorptionSpec::Uniform(Absorption::Scalar(0.0)));
        let mut sc = sc;
        sc.room
            .set_absorption(AbsorptionSpec::Uniform(Absorption::Banded(bands)))
            .unwrap();
        let params = SimParams {
            rir_seconds: Some(0.6),
            ..SimParams::default()
        };
        let rir = simulate_rir(
            &sc,
            &RirModel::BandedReflection(BandedParams::default()),
            &params,
        )
        .unwrap();

        let fs = params.sample_rate as f64;
        let d = sc.source.distance(sc.receiver);
        let cut = (d / params.speed_of_sound * fs) as usize + 80;
        let tail = &rir.samples[cut..];

        use rustfft::{num_complex::Complex, FftPlanner};
        let n = tail.len().next_power_of_two();
        let mut buf: Vec<Complex<f64>> = tail
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(n)
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let band_energy = |lo: f64, hi: f64| -> f64 {
            let (b0, b1) = (
                (lo / fs * n as f64) as usize,
                (hi / fs * n as f64) as usize,
            );
            buf[b0..b1].iter().map(|v| v.norm_sqr()).sum()
        };
        let low = band_energy(40.0, 180.0);
        let high = band_energy(2_800.0, 7_000.0);
        assert!(
            high < low * 0.05,
            "high-band tail energy {high} should be far below low-band {low}"
        );
    }

    #[test]
    fn banded_with_near_rigid_walls_approaches_the_plain_image_model() {
        // At alpha -> 0 every reflection coefficient is exactly 1 in every
        // band and at every angle, so the banded skeletons all equal the
        // plain image-source RIR and the bank sums them back unchanged.
        let sc = scenario(AbsorptionSpec::Uniform(Absorption::Scalar(0.0)));
        let params = SimParams {
            rir_seconds: Some(0.12),
            ..SimParams::default()
        };
        let banded = simulate_rir(
            &sc,
            &RirModel::BandedReflection(BandedParams {
                max_order: Some(3),
                ..BandedParams::default()
            }),
            &params,
        )
        .unwrap();
        let image = simulate_rir(
            &sc,
            &RirModel::Image(ImageParams {
                max_order: Some(3),
            }),
            &params,
        )
        .unwrap();
        let peak = image.samples.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (i, (a, b)) in banded.samples.iter().zip(&image.samples).enumerate() {
            assert!((a - b).abs() < 1e-9 * peak, "sample {i}: {a} vs {b}");
        }
    }

    #[test]
    fn absorption_band_count_must_match_the_bank() {
        let sc = scenario(AbsorptionSpec::Uniform(Absorption::Scalar(0.0)));
        let mut sc = sc;
        sc.room
            .set_absorption(AbsorptionSpec::Uniform(Absorption::Banded(vec![0.1, 0.2, 0.3])))
            .unwrap();
        let err = simulate_rir(
            &sc,
            &RirModel::BandedReflection(BandedParams::default()),
            &SimParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, AcousticsError::AbsorptionBandMismatch { .. }));
    }

    #[test]
    fn rt60_derived_absorption_lands_the_broadband_decay_near_target() {
        let room = Room::shoebox(Vec3::new(6.0, 5.0, 3.0), AbsorptionSpec::FromRt60).unwrap();
        let sc = Scenario {
            id: "banded-rt60".into(),
            room,
            source: Vec3::new(1.5, 2.0, 1.4),
            receiver: Vec3::new(4.5, 3.2, 1.6),
            rt60_target: 0.4,
            seed: 1,
        };
        let rir = simulate_rir(
            &sc,
            &RirModel::BandedReflection(BandedParams::default()),
            &SimParams::default(),
        )
        .unwrap();
        let analysis =
            crate::acoustics::analyze_rir(&rir, crate::acoustics::DEFAULT_FIT_RANGE_DB).unwrap();
        let rel = (analysis.rt60 - 0.4).abs() / 0.4;
        assert!(rel < 0.35, "banded rt60 {} vs target 0.4", analysis.rt60);
    }
}

//! Hybrid early/late model: exact low-order image sources crossfaded into a
//! ray-traced stochastic tail.
//!
//! Early reflections keep the deterministic timing and sign structure that
//! matters perceptually and for dereverberation features, while the late
//! field — where individual arrivals overlap beyond resolution — is cheaper
//! and statistically adequate as enveloped Gaussian noise. The two parts are
//! blended with a raised-cosine amplitude crossfade centred on the mixing
//! time, by default `(d + 2.5·λ)/c` with `λ = 4V/S` the mean free path.

use crate::acoustics::image::{self};
use crate::acoustics::ray::trace_energy_histogram;
use crate::acoustics::tail::{density_to_sample_power, noise_tail};
use crate::acoustics::{surface_alphas, AcousticsError, HybridParams, ImageParams, SimParams};
use crate::geometry::Scenario;
use crate::num::Sample;
use crate::seed::derive_seed;

/// Seed-stream tags so the ray directions and the tail noise never share a
/// generator state.
const SEED_RAYS: u64 = 1;
const SEED_TAIL: u64 = 2;

pub(crate) fn simulate<T: Sample>(
    scenario: &Scenario<T>,
    p: &HybridParams,
    params: &SimParams,
    n_samples: usize,
) -> Result<Vec<T>, AcousticsError> {
    let fs = params.sample_rate as f64;
    let c = params.speed_of_sound;
    let room = &scenario.room;
    let duration = n_samples as f64 / fs;

    let early = image::simulate(
        scenario,
        &ImageParams {
            max_order: Some(p.image_order),
        },
        params,
        n_samples,
    )?;

    let alphas: Vec<f64> = surface_alphas(room, scenario.rt60_target.as_f64(), c, 1)?
        .into_iter()
        .map(|bands| bands[0].as_f64())
        .collect();
    let hist = trace_energy_histogram(
        room,
        &alphas,
        scenario.source,
        scenario.receiver,
        p.receiver_radius,
        p.rays,
        p.bin_seconds,
        duration,
        c,
        derive_seed(scenario.seed, &[SEED_RAYS]),
    );
    let sigma_sq: Vec<f64> = (0..n_samples)
        .map(|i| {
            density_to_sample_power(
                hist.density_at(i as f64 / fs),
                c,
                params.sample_rate,
            )
        })
        .collect();
    let tail: Vec<T> = noise_tail(&sigma_sq, derive_seed(scenario.seed, &[SEED_TAIL]));

    let (surface, volume) = room.surface_and_volume();
    let mean_free_path = 4.0 * volume.as_f64() / surface.as_f64();
    let direct = scenario.source.distance(scenario.receiver).as_f64();
    let half_fade = p.crossfade_seconds / 2.0;
    // The crossfade must not start before the direct sound arrives.
    let t_c = p
        .transition_seconds
        .unwrap_or((direct + 2.5 * mean_free_path) / c)
        .max(direct / c + half_fade);

    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = i as f64 / fs;
        let w_early = if t <= t_c - half_fade {
            1.0
        } else if t >= t_c + half_fade || p.crossfade_seconds == 0.0 {
            0.0
        } else {
            0.5 * (1.0
                + (std::f64::consts::PI * (t - (t_c - half_fade)) / p.crossfade_seconds).cos())
        };
        let w = T::of(w_early);
        out.push(early[i] * w + tail[i] * (T::one() - w));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::{analyze_rir, simulate_rir, RirModel};
    use crate::geometry::{AbsorptionSpec, Room, Vec3};

    fn scenario(rt60: f64, seed: u64) -> Scenario<f64> {
        let room = Room::shoebox(
            Vec3::new(6.0, 5.0, 3.0),
            AbsorptionSpec::FromRt60,
        )
        .unwrap();
        Scenario {
            id: "hybrid-test".into(),
            room,
            source: Vec3::new(1.5, 2.0, 1.4),
            receiver: Vec3::new(4.5, 3.2, 1.6),
            rt60_target: rt60,
            seed,
        }
    }

    #[test]
    fn early_window_equals_the_image_model() {
        let sc = scenario(0.4, 21);
        let params = SimParams::default();
        let p = HybridParams::default();
        let hybrid = simulate_rir(&sc, &RirModel::Hybrid(p.clone()), &params).unwrap();
        let image = simulate_rir(
            &sc,
            &RirModel::Image(ImageParams {
                max_order: Some(p.image_order),
            }),
            &params,
        )
        .unwrap();

        let (surface, volume) = sc.room.surface_and_volume();
        let t_c = (sc.source.distance(sc.receiver) + 2.5 * 4.0 * volume / surface) / 343.0;
        let fade_start =
            ((t_c - p.crossfade_seconds / 2.0) * params.sample_rate as f64) as usize;
        assert!(fade_start > 100, "crossfade must start after the direct sound");
        assert_eq!(
            &hybrid.samples[..fade_start],
            &image.samples[..fade_start],
            "pre-crossfade region must be the pure image model"
        );
        // ... and past the crossfade the two must differ (stochastic tail).
        assert_ne!(&hybrid.samples[fade_start + 400..], &image.samples[fade_start + 400..]);
    }

    #[test]
    fn tail_is_present_after_the_transition() {
        let sc = scenario(0.5, 3);
        let params = SimParams::default();
        let rir = simulate_rir(&sc, &RirModel::Hybrid(HybridParams::default()), &params).unwrap();
        let fs = params.sample_rate as f64;
        let late = &rir.samples[(0.25 * fs) as usize..(0.35 * fs) as usize];
        let energy: f64 = late.iter().map(|v| v * v).sum();
        assert!(energy > 0.0, "stochastic tail must carry energy");
    }

    #[test]
    fn broadband_decay_lands_near_the_target_rt60() {
        for &(rt60, seed) in &[(0.3, 11u64), (0.6, 12u64)] {
            let sc = scenario(rt60, seed);
            let params = SimParams::default();
            let rir =
                simulate_rir(&sc, &RirModel::Hybrid(HybridParams::default()), &params).unwrap();
            let analysis = analyze_rir(&rir, crate::acoustics::DEFAULT_FIT_RANGE_DB).unwrap();
            let rel = (analysis.rt60 - rt60).abs() / rt60;
            assert!(
                rel < 0.3,
                "target {rt60}: measured {} (rel err {rel:.3})",
                analysis.rt60
            );
        }
    }

    #[test]
    fn same_scenario_seed_reproduces_the_rir() {
        let params = SimParams::default();
        let a = simulate_rir(
            &scenario(0.4, 77),
            &RirModel::Hybrid(HybridParams::default()),
            &params,
        )
        .unwrap();
        let b = simulate_rir(
            &scenario(0.4, 77),
            &RirModel::Hybrid(HybridParams::default()),
            &params,
        )
        .unwrap();
        assert_eq!(a.samples, b.samples);
        let c = simulate_rir(
            &scenario(0.4, 78),
            &RirModel::Hybrid(HybridParams::default()),
            &params,
        )
        .unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn transition_override_is_clamped_to_after_the_direct_sound() {
        let sc = scenario(0.4, 5);
        let params = SimParams::default();
        // Absurdly early transition (well before the direct path arrives):
        // the clamp keeps the direct sound intact.
        let rir = simulate_rir(
            &sc,
            &RirModel::Hybrid(HybridParams {
                transition_seconds: Some(1e-4),
                ..HybridParams::default()
            }),
            &params,
        )
        .unwrap();
        let d = sc.source.distance(sc.receiver);
        let direct_idx = (d / 343.0 * params.sample_rate as f64).round() as usize;
        let direct_amp = 1.0 / (4.0 * std::f64::consts::PI * d);
        let got = rir.samples[direct_idx];
        // Direct pulse may sit under the start of the crossfade, so allow
        // half amplitude rather than demanding the exact image value.
        assert!(
            got > 0.4 * direct_amp,
            "direct sample {got} vs full amplitude {direct_amp}"
        );
    }
}

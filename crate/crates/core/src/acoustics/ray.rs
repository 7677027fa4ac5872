//! Stochastic energy ray tracing for the late reverberant field.
//!
//! Rays leave the source in uniformly random directions carrying equal
//! shares of unit energy, scatter off the walls, and lose the wall's
//! absorption fraction at every bounce. A spherical receiver volume tallies
//! energy weighted by chord length, which estimates the acoustic energy
//! density `w(t)`: a packet with energy `e` crossing the sphere spends
//! `chord/c` seconds inside, so summing `e·chord` over a time bin and
//! dividing by `V_sphere · c · Δt` time-averages the density.
//!
//! Reflections are cosine-weighted (Lambertian) rather than specular. The
//! histogram only ever shapes the *late* field, whose specular structure is
//! already gone in a real room; diffuse reflection keeps the ray directions
//! mixing, which reproduces the 4V/S mean free path and hence the Eyring
//! decay that the absorption inversion assumes. Purely specular tracing in
//! a rectangular room never mixes — grazing rays along the long axis decay
//! far slower than average and drag the late slope away from the target.

use crate::geometry::{Room, Vec3};
use crate::num::Sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};

/// Rays below this share of their initial energy stop propagating.
const ENERGY_CUTOFF: f64 = 1e-12;

/// Any orthonormal pair spanning the plane perpendicular to unit vector `n`.
fn tangent_basis<T: Sample>(n: Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    let helper = if n.x.as_f64().abs() < 0.9 {
        Vec3::new(T::one(), T::zero(), T::zero())
    } else {
        Vec3::new(T::zero(), T::one(), T::zero())
    };
    let t1 = n
        .cross(helper)
        .normalized()
        .expect("helper is never parallel to n");
    (t1, n.cross(t1))
}

/// Energy density estimate per time bin; bin `i` covers
/// `[i·bin_seconds, (i+1)·bin_seconds)`.
pub(crate) struct EnergyHistogram {
    pub bin_seconds: f64,
    pub bins: Vec<f64>,
}

impl EnergyHistogram {
    /// `w(t)` linearly interpolated between bin centres (clamped at the
    /// ends; zero past the histogram).
    pub fn density_at(&self, t: f64) -> f64 {
        if self.bins.is_empty() || t < 0.0 {
            return 0.0;
        }
        let pos = t / self.bin_seconds - 0.5;
        if pos <= 0.0 {
            return self.bins[0];
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.bins.len() {
            return if i < self.bins.len() { self.bins[i] } else { 0.0 };
        }
        let frac = pos - i as f64;
        self.bins[i] * (1.0 - frac) + self.bins[i + 1] * frac
    }
}

/// Traces `n_rays` diffusely reflecting energy rays and returns the
/// receiver-sphere energy density histogram. `alphas` holds one broadband
/// absorption coefficient per room surface.
pub(crate) fn trace_energy_histogram<T: Sample>(
    room: &Room<T>,
    alphas: &[f64],
    source: Vec3<T>,
    receiver: Vec3<T>,
    receiver_radius: f64,
    n_rays: usize,
    bin_seconds: f64,
    max_seconds: f64,
    speed_of_sound: f64,
    seed: u64,
) -> EnergyHistogram {
    let n_bins = (max_seconds / bin_seconds).ceil() as usize;
    let mut bins = vec![0.0f64; n_bins];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = speed_of_sound;
    let r_sq = receiver_radius * receiver_radius;
    let initial_energy = 1.0 / n_rays as f64;

    for _ in 0..n_rays {
        let d: [f64; 3] = UnitSphere.sample(&mut rng);
        let mut dir = Vec3::new(T::of(d[0]), T::of(d[1]), T::of(d[2]));
        let mut pos = source;
        let mut energy = initial_energy;
        let mut elapsed = 0.0f64;

        while elapsed < max_seconds && energy > initial_energy * ENERGY_CUTOFF {
            // Numerical drift can push a ray marginally outside the mesh;
            // such rays are simply dropped.
            let Some((t_hit, surface)) = room.first_hit(pos, dir) else {
                break;
            };
            let seg_len = t_hit.as_f64();

            // Chord of this segment through the receiver sphere.
            let oc = receiver - pos;
            let along = oc.dot(dir).as_f64();
            let perp_sq = oc.dot(oc).as_f64() - along * along;
            if perp_sq < r_sq {
                let half = (r_sq - perp_sq).sqrt();
                let enter = (along - half).max(0.0);
                let exit = (along + half).min(seg_len);
                if exit > enter {
                    let t_mid = elapsed + (enter + exit) * 0.5 / c;
                    let bin = (t_mid / bin_seconds) as usize;
                    if bin < n_bins {
                        bins[bin] += energy * (exit - enter);
                    }
                }
            }

            pos = pos + dir * t_hit;
            let n = room.surfaces()[surface].normal;
            // Cosine-weighted direction about the inward-facing normal.
            let inward = if n.dot(dir) > T::zero() { -n } else { n };
            let (t1, t2) = tangent_basis(inward);
            let u1: f64 = rng.gen();
            let u2: f64 = rng.gen();
            let r = u1.sqrt();
            let (sin_phi, cos_phi) = (std::f64::consts::TAU * u2).sin_cos();
            dir = t1 * T::of(r * cos_phi)
                + t2 * T::of(r * sin_phi)
                + inward * T::of((1.0 - u1).max(0.0).sqrt());
            energy *= 1.0 - alphas[surface];
            elapsed += seg_len / c;
        }
    }

    let sphere_volume = 4.0 / 3.0 * std::f64::consts::PI * receiver_radius.powi(3);
    let norm = sphere_volume * c * bin_seconds;
    for b in &mut bins {
        *b /= norm;
    }
    EnergyHistogram { bin_seconds, bins }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Absorption, AbsorptionSpec, Room};

    fn rigid_room() -> Room<f64> {
        Room::shoebox(Vec3::new(6.0, 5.0, 4.0), AbsorptionSpec::Uniform(Absorption::Scalar(0.0))).unwrap()
    }

    #[test]
    fn lossless_room_reaches_the_diffuse_field_density() {
        // With no absorption the stationary energy density in the room is
        // total energy / volume = 1/120 m⁻³. After a few mean free path
        // times the histogram should sit near that value.
        let room = rigid_room();
        let hist = trace_energy_histogram(
            &room,
            &[0.0; 6],
            Vec3::new(2.0, 2.0, 2.0),
            Vec3::new(4.0, 3.0, 1.5),
            0.5,
            20_000,
            1e-3,
            0.25,
            343.0,
            11,
        );
        let late: Vec<f64> = hist.bins[150..250].to_vec();
        let mean = late.iter().sum::<f64>() / late.len() as f64;
        let expect = 1.0 / 120.0;
        assert!(
            (mean - expect).abs() < 0.15 * expect,
            "density {mean} vs diffuse prediction {expect}"
        );
    }

    #[test]
    fn absorption_makes_the_histogram_decay() {
        let room = Room::shoebox(
            Vec3::new(6.0, 5.0, 4.0),
            AbsorptionSpec::Uniform(Absorption::Scalar(0.3)),
        )
        .unwrap();
        let hist = trace_energy_histogram(
            &room,
            &[0.3; 6],
            Vec3::new(2.0, 2.0, 2.0),
            Vec3::new(4.0, 3.0, 1.5),
            0.5,
            20_000,
            1e-3,
            0.4,
            343.0,
            11,
        );
        let early: f64 = hist.bins[40..90].iter().sum();
        let late: f64 = hist.bins[300..350].iter().sum();
        assert!(late < early * 0.05, "late {late} vs early {early}");
    }

    #[test]
    fn decay_rate_matches_the_eyring_prediction() {
        // Diffuse reflections keep the direction distribution mixing, so the
        // ensemble decays as e^(c·S·ln(1−α)/(4V)·t). Fit the log histogram
        // slope and compare as an RT60.
        let alpha = 0.25;
        let dims = Vec3::new(7.0, 5.0, 3.0);
        let room = Room::shoebox(dims, AbsorptionSpec::Uniform(Absorption::Scalar(alpha))).unwrap();
        let (surface, volume) = room.surface_and_volume();
        let hist = trace_energy_histogram(
            &room,
            &[alpha; 6],
            Vec3::new(2.0, 2.0, 1.2),
            Vec3::new(5.0, 3.5, 2.0),
            0.5,
            40_000,
            1e-3,
            0.6,
            343.0,
            5,
        );
        let decay_rate = 343.0 * surface * (1.0f64 - alpha).ln() / (4.0 * volume);
        let rt60_expect = -60.0 / (10.0 * decay_rate / std::f64::consts::LN_10);

        // Least-squares slope of 10·log10(w) between 80 ms and 400 ms.
        let pts: Vec<(f64, f64)> = (80..400)
            .filter(|&i| hist.bins[i] > 0.0)
            .map(|i| ((i as f64 + 0.5) * 1e-3, 10.0 * hist.bins[i].log10()))
            .collect();
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let rt60_fit = -60.0 / slope;
        assert!(
            (rt60_fit - rt60_expect).abs() < 0.2 * rt60_expect,
            "rt60 from rays {rt60_fit} vs Eyring {rt60_expect}"
        );
    }

    #[test]
    fn histogram_is_deterministic_in_the_seed() {
        let room = rigid_room();
        let run = |seed| {
            trace_energy_histogram(
                &room,
                &[0.2; 6],
                Vec3::new(2.0, 2.0, 2.0),
                Vec3::new(4.0, 3.0, 1.5),
                0.5,
                2_000,
                1e-3,
                0.2,
                343.0,
                seed,
            )
            .bins
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn density_interpolation_is_piecewise_linear() {
        let hist = EnergyHistogram {
            bin_seconds: 0.01,
            bins: vec![2.0, 4.0, 0.0],
        };
        assert_eq!(hist.density_at(-1.0), 0.0);
        assert_eq!(hist.density_at(0.0), 2.0); // clamped before first centre
        assert!((hist.density_at(0.0075) - 2.5).abs() < 1e-12);
        assert!((hist.density_at(0.015) - 4.0).abs() < 1e-12);
        assert!((hist.density_at(0.02) - 2.0).abs() < 1e-12);
        assert_eq!(hist.density_at(0.025), 0.0); // last centre, clamped
        assert_eq!(hist.density_at(1.0), 0.0);
    }
}

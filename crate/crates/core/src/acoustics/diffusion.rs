//! Late reverberation from the acoustic diffusion equation.
//!
//! The reverberant energy density obeys `∂w/∂t = D∇²w` with diffusion
//! coefficient `D = λc/3` (`λ = 4V/S` the mean free path) and a Robin
//! absorption condition `D ∂w/∂n = −h·w` on the walls. The PDE is solved by
//! explicit finite differences on a coarse voxel grid; the receiver cell's
//! density envelope then shapes seeded Gaussian noise into a pressure tail,
//! while the direct sound and first-order images supply the deterministic
//! arrival structure, faded into the tail after the last early arrival.

use crate::acoustics::image::{self, for_each_image};
use crate::acoustics::tail::{density_to_sample_power, noise_tail};
use crate::acoustics::{
    mean_alpha, surface_alphas, AcousticsError, DiffusionParams, ExchangeModel, ImageParams,
    SimParams,
};
use crate::geometry::{Room, Scenario, Vec3};
use crate::num::Sample;
use crate::seed::derive_seed;

const SEED_TAIL: u64 = 3;
/// Cap on voxel count so a typo in `grid_spacing` fails fast instead of
/// allocating gigabytes.
const MAX_CELLS: usize = 4_000_000;

impl ExchangeModel {
    /// Boundary exchange coefficient `h` for mean absorption `alpha`: the
    /// wall energy flux is `h·w`. `Sabine` is the classical `cα/4`; `Eyring`
    /// uses `−c·ln(1−α)/4`, consistent with the Eyring RT60→α mapping (the
    /// default elsewhere), so target decay times round-trip; `Modified` is
    /// the `cα/(2(2−α))` variant, accurate for mid absorption.
    pub fn coefficient(self, alpha: f64, speed_of_sound: f64) -> f64 {
        let c = speed_of_sound;
        match self {
            ExchangeModel::Sabine => c * alpha / 4.0,
            ExchangeModel::Eyring => -c * (1.0 - alpha).ln() / 4.0,
            ExchangeModel::Modified => c * alpha / (2.0 * (2.0 - alpha)),
        }
    }
}

struct Grid {
    /// Flat index of each interior cell's 6 neighbours in the *compact*
    /// arrays; a missing neighbour (wall) points back at the cell itself,
    /// which zeroes its Laplacian contribution.
    neighbors: Vec<[u32; 6]>,
    /// Number of wall-adjacent faces per cell.
    boundary_faces: Vec<u8>,
    /// Compact index of the cell containing a point (nearest interior cell
    /// if the containing voxel's centre falls outside the room).
    source: usize,
    receiver: usize,
    spacing: f64,
    /// Total voxel boundary area, for calibrating the sink against the true
    /// surface area.
    boundary_area: f64,
}

fn build_grid<T: Sample>(
    room: &Room<T>,
    source: Vec3<T>,
    receiver: Vec3<T>,
    dx: f64,
) -> Result<Grid, AcousticsError> {
    let (lo_t, hi_t) = room.bounding_box();
    let lo = Vec3::<f64>::from_f64(lo_t.to_f64());
    let hi = Vec3::<f64>::from_f64(hi_t.to_f64());
    let n = [
        (((hi.x - lo.x) / dx).ceil() as usize).max(1),
        (((hi.y - lo.y) / dx).ceil() as usize).max(1),
        (((hi.z - lo.z) / dx).ceil() as usize).max(1),
    ];
    let total = n[0]
        .checked_mul(n[1])
        .and_then(|v| v.checked_mul(n[2]))
        .filter(|&v| v <= MAX_CELLS)
        .ok_or(AcousticsError::InvalidParam {
            what: "grid_spacing (voxel count exceeds limit)",
            value: dx,
        })?;

    let center = |ix: usize, iy: usize, iz: usize| {
        Vec3::new(
            T::of(lo.x + (ix as f64 + 0.5) * dx),
            T::of(lo.y + (iy as f64 + 0.5) * dx),
            T::of(lo.z + (iz as f64 + 0.5) * dx),
        )
    };

    // compact[flat] = interior index + 1, or 0 for cells outside the room.
    let mut compact = vec![0u32; total];
    let mut centers: Vec<Vec3<f64>> = Vec::new();
    let mut count = 0u32;
    let flat = |ix: usize, iy: usize, iz: usize| (ix * n[1] + iy) * n[2] + iz;
    for ix in 0..n[0] {
        for iy in 0..n[1] {
            for iz in 0..n[2] {
                let c = center(ix, iy, iz);
                if room.contains(c, T::zero()) {
                    count += 1;
                    compact[flat(ix, iy, iz)] = count;
                    centers.push(Vec3::<f64>::from_f64(c.to_f64()));
                }
            }
        }
    }
    if count == 0 {
        return Err(AcousticsError::InvalidParam {
            what: "grid_spacing (no voxel centre falls inside the room)",
            value: dx,
        });
    }

    let mut neighbors = vec![[0u32; 6]; count as usize];
    let mut boundary_faces = vec![0u8; count as usize];
    for ix in 0..n[0] {
        for iy in 0..n[1] {
            for iz in 0..n[2] {
                let me = compact[flat(ix, iy, iz)];
                if me == 0 {
                    continue;
                }
                let idx = (me - 1) as usize;
                let deltas: [(isize, isize, isize); 6] = [
                    (-1, 0, 0),
                    (1, 0, 0),
                    (0, -1, 0),
                    (0, 1, 0),
                    (0, 0, -1),
                    (0, 0, 1),
                ];
                for (slot, (dxi, dyi, dzi)) in deltas.iter().enumerate() {
                    let (jx, jy, jz) = (
                        ix as isize + dxi,
                        iy as isize + dyi,
                        iz as isize + dzi,
                    );
                    let nb = if jx < 0
                        || jy < 0
                        || jz < 0
                        || jx as usize >= n[0]
                        || jy as usize >= n[1]
                        || jz as usize >= n[2]
                    {
                        0
                    } else {
                        compact[flat(jx as usize, jy as usize, jz as usize)]
                    };
                    if nb == 0 {
                        neighbors[idx][slot] = idx as u32;
                        boundary_faces[idx] += 1;
                    } else {
                        neighbors[idx][slot] = nb - 1;
                    }
                }
            }
        }
    }

    let nearest = |p: Vec3<T>| -> usize {
        let p = Vec3::<f64>::from_f64(p.to_f64());
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, c) in centers.iter().enumerate() {
            let d = c.distance(p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    };
    let locate = |p: Vec3<T>| -> usize {
        let pf = Vec3::<f64>::from_f64(p.to_f64());
        let ix = (((pf.x - lo.x) / dx).floor() as isize).clamp(0, n[0] as isize - 1) as usize;
        let iy = (((pf.y - lo.y) / dx).floor() as isize).clamp(0, n[1] as isize - 1) as usize;
        let iz = (((pf.z - lo.z) / dx).floor() as isize).clamp(0, n[2] as isize - 1) as usize;
        match compact[flat(ix, iy, iz)] {
            0 => nearest(p),
            m => (m - 1) as usize,
        }
    };

    let total_faces: usize = boundary_faces.iter().map(|&b| b as usize).sum();
    Ok(Grid {
        source: locate(source),
        receiver: locate(receiver),
        neighbors,
        boundary_faces,
        spacing: dx,
        boundary_area: total_faces as f64 * dx * dx,
    })
}

/// Receiver-cell energy density over time, sampled every `dt`, after a unit
/// energy impulse at the source cell at t = 0.
fn solve_density(
    grid: &Grid,
    diffusivity: f64,
    sink: f64, // h/dx already scaled to the voxelised boundary area
    dt: f64,
    n_steps: usize,
) -> Vec<f64> {
    let dx = grid.spacing;
    let cells = grid.neighbors.len();
    let mut w = vec![0.0f64; cells];
    let mut w_next = vec![0.0f64; cells];
    w[grid.source] = 1.0 / (dx * dx * dx);

    let k_diff = dt * diffusivity / (dx * dx);
    let k_sink = dt * sink;
    let mut series = Vec::with_capacity(n_steps + 1);
    series.push(w[grid.receiver]);
    for _ in 0..n_steps {
        for i in 0..cells {
            let nb = &grid.neighbors[i];
            let sum = w[nb[0] as usize]
                + w[nb[1] as usize]
                + w[nb[2] as usize]
                + w[nb[3] as usize]
                + w[nb[4] as usize]
                + w[nb[5] as usize];
            let wi = w[i];
            w_next[i] =
                wi + k_diff * (sum - 6.0 * wi) - k_sink * grid.boundary_faces[i] as f64 * wi;
        }
        std::mem::swap(&mut w, &mut w_next);
        series.push(w[grid.receiver]);
    }
    series
}

pub(crate) fn simulate<T: Sample>(
    scenario: &Scenario<T>,
    p: &DiffusionParams,
    params: &SimParams,
    n_samples: usize,
) -> Result<Vec<T>, AcousticsError> {
    let fs = params.sample_rate as f64;
    let c = params.speed_of_sound;
    let room = &scenario.room;
    let duration = n_samples as f64 / fs;

    let alphas = surface_alphas(room, scenario.rt60_target.as_f64(), c, 1)?;
    let alpha_bar = mean_alpha(room, &alphas, 0);
    let (surface, volume) = room.surface_and_volume();
    let (surface, volume) = (surface.as_f64(), volume.as_f64());
    let mean_free_path = 4.0 * volume / surface;
    let diffusivity = mean_free_path * c / 3.0;

    let grid = build_grid(room, scenario.source, scenario.receiver, p.grid_spacing)?;
    // The staircase voxel hull has more area than the true walls; scale the
    // per-face sink so total absorption matches the real surface.
    let h = p.exchange.coefficient(alpha_bar, c) * surface / grid.boundary_area;
    let dx = grid.spacing;

    let max_dt = 1.0 / (6.0 * (diffusivity / (dx * dx)).max(h / dx));
    let dt = match p.time_step {
        Some(dt) if !(dt.is_finite() && dt > 0.0) => {
            return Err(AcousticsError::InvalidParam {
                what: "time_step",
                value: dt,
            })
        }
        Some(dt) if dt > max_dt => {
            return Err(AcousticsError::UnstableTimeStep { dt, max_dt });
        }
        Some(dt) => dt,
        None => 0.9 * max_dt,
    };

    let n_steps = (duration / dt).ceil() as usize + 1;
    let density = solve_density(&grid, diffusivity, h / dx, dt, n_steps);

    let sigma_sq: Vec<f64> = (0..n_samples)
        .map(|i| {
            let t = i as f64 / fs;
            let pos = t / dt;
            let j = pos.floor() as usize;
            let frac = pos - j as f64;
            let w = density[j] * (1.0 - frac) + density[(j + 1).min(density.len() - 1)] * frac;
            density_to_sample_power(w, c, params.sample_rate)
        })
        .collect();
    let tail: Vec<T> = noise_tail(&sigma_sq, derive_seed(scenario.seed, &[SEED_TAIL]));

    let image_params = ImageParams {
        max_order: Some(p.image_order),
    };
    let mut out = image::simulate(scenario, &image_params, params, n_samples)?;

    // Last deterministic arrival; the stochastic tail fades in after it.
    let mut last_arrival = 0.0f64;
    let max_distance = c * (n_samples as f64 + 16.0) / fs;
    for_each_image(
        room,
        scenario.source,
        scenario.receiver,
        image_params.max_order,
        max_distance,
        |arr| {
            last_arrival = last_arrival.max(arr.distance / c);
        },
    );

    for (i, slot) in out.iter_mut().enumerate() {
        let t = i as f64 / fs;
        let w_tail = if t <= last_arrival {
            0.0
        } else if t >= last_arrival + p.fade_seconds || p.fade_seconds == 0.0 {
            1.0
        } else {
            0.5 * (1.0 - (std::f64::consts::PI * (t - last_arrival) / p.fade_seconds).cos())
        };
        *slot += tail[i] * T::of(w_tail);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::{analyze_rir, simulate_rir, RirModel, DEFAULT_FIT_RANGE_DB};
    use crate::geometry::AbsorptionSpec;

    fn scenario(rt60: f64, seed: u64) -> Scenario<f64> {
        let room = Room::shoebox(
            Vec3::new(6.0, 5.0, 3.0),
            AbsorptionSpec::FromRt60,
        )
        .unwrap();
        Scenario {
            id: "diffusion-test".into(),
            room,
            source: Vec3::new(1.5, 2.0, 1.4),
            receiver: Vec3::new(4.5, 3.2, 1.6),
            rt60_target: rt60,
            seed,
        }
    }

    #[test]
    fn decay_matches_the_target_rt60() {
        for &(rt60, seed) in &[(0.3, 41u64), (0.7, 42u64)] {
            let rir = simulate_rir(
                &scenario(rt60, seed),
                &RirModel::Diffusion(DiffusionParams::default()),
                &SimParams::default(),
            )
            .unwrap();
            let analysis = analyze_rir(&rir, DEFAULT_FIT_RANGE_DB).unwrap();
            let rel = (analysis.rt60 - rt60).abs() / rt60;
            assert!(
                rel < 0.25,
                "target {rt60}: measured {} (rel {rel:.3})",
                analysis.rt60
            );
        }
    }

    #[test]
    fn oversized_time_step_is_rejected_with_the_bound() {
        let err = simulate_rir(
            &scenario(0.5, 1),
            &RirModel::Diffusion(DiffusionParams {
                time_step: Some(1.0),
                ..DiffusionParams::default()
            }),
            &SimParams::default(),
        )
        .unwrap_err();
        match err {
            AcousticsError::UnstableTimeStep { dt, max_dt } => {
                assert_eq!(dt, 1.0);
                assert!(max_dt < 1.0 && max_dt > 0.0);
            }
            other => panic!("expected UnstableTimeStep, got {other}"),
        }
    }

    #[test]
    fn user_time_step_below_the_bound_is_accepted() {
        let rir = simulate_rir(
            &scenario(0.4, 2),
            &RirModel::Diffusion(DiffusionParams {
                time_step: Some(1e-5),
                ..DiffusionParams::default()
            }),
            &SimParams::default(),
        )
        .unwrap();
        assert!(rir.energy() > 0.0);
    }

    #[test]
    fn too_fine_a_grid_fails_fast() {
        let err = simulate_rir(
            &scenario(0.4, 2),
            &RirModel::Diffusion(DiffusionParams {
                grid_spacing: 0.004,
                ..DiffusionParams::default()
            }),
            &SimParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, AcousticsError::InvalidParam { .. }));
    }

    #[test]
    fn tail_is_reproducible_from_the_scenario_seed() {
        let run = |seed| {
            simulate_rir(
                &scenario(0.4, seed),
                &RirModel::Diffusion(DiffusionParams::default()),
                &SimParams::default(),
            )
            .unwrap()
            .samples
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn early_images_survive_in_the_output() {
        let sc = scenario(0.5, 6);
        let params = SimParams::default();
        let rir = simulate_rir(
            &sc,
            &RirModel::Diffusion(DiffusionParams::default()),
            &params,
        )
        .unwrap();
        let d = sc.source.distance(sc.receiver);
        let idx = (d / 343.0 * params.sample_rate as f64).round() as usize;
        let want = 1.0 / (4.0 * std::f64::consts::PI * d);
        // Direct pulse precedes the tail fade-in, so it is exactly the image
        // model's value (up to fractional-delay spreading).
        assert!(rir.samples[idx].abs() > 0.5 * want);
    }

    #[test]
    fn works_on_a_non_shoebox_room() {
        // Wedge: a shoebox with the top face tilted. The voxel mask and the
        // boundary-area calibration must handle the slanted plane.
        let vertices = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(6.0, 0.0, 0.0),
            Vec3::new(6.0, 5.0, 0.0),
            Vec3::new(0.0, 5.0, 0.0),
            Vec3::new(0.0, 0.0, 4.0),
            Vec3::new(6.0, 0.0, 2.5),
            Vec3::new(6.0, 5.0, 2.5),
            Vec3::new(0.0, 5.0, 4.0),
        ];
        let faces: Vec<Vec<usize>> = vec![
            vec![0, 3, 2, 1],
            vec![4, 5, 6, 7],
            vec![0, 1, 5, 4],
            vec![2, 3, 7, 6],
            vec![0, 4, 7, 3],
            vec![1, 2, 6, 5],
        ];
        let room = Room::polyhedron(
            vertices,
            &faces,
            AbsorptionSpec::FromRt60,
        )
        .unwrap();
        let sc = Scenario {
            id: "wedge".into(),
            room,
            source: Vec3::new(1.5, 2.0, 1.2),
            receiver: Vec3::new(4.5, 3.0, 1.5),
            rt60_target: 0.4,
            seed: 3,
        };
        let rir = simulate_rir(
            &sc,
            &RirModel::Diffusion(DiffusionParams::default()),
            &SimParams::default(),
        )
        .unwrap();
        let analysis = analyze_rir(&rir, DEFAULT_FIT_RANGE_DB).unwrap();
        let rel = (analysis.rt60 - 0.4).abs() / 0.4;
        assert!(rel < 0.35, "wedge rt60 {} vs 0.4", analysis.rt60);
    }

    #[test]
    fn sabine_exchange_decays_slower_than_eyring() {
        // Documented deviation check: with absorption derived from the Eyring
        // mapping, the Sabine exchange coefficient is smaller, so its decay
        // must be slower. This pins the default choice.
        let run = |exchange| {
            let rir = simulate_rir(
                &scenario(0.4, 8),
                &RirModel::Diffusion(DiffusionParams {
                    exchange,
                    ..DiffusionParams::default()
                }),
                &SimParams::default(),
            )
            .unwrap();
            analyze_rir(&rir, DEFAULT_FIT_RANGE_DB).unwrap().rt60
        };
        let sabine = run(ExchangeModel::Sabine);
        let eyring = run(ExchangeModel::Eyring);
        assert!(
            sabine > eyring,
            "Sabine h < Eyring h must lengthen the decay ({sabine} vs {eyring})"
        );
    }
}

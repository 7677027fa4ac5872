//! Image-source enumeration and the plain image-source model.
//!
//! Shoebox rooms walk the mirror lattice directly; convex polyhedra build
//! images breadth-first (reflect across each surface whose plane the parent
//! image is strictly inside, which also rules out back-to-back duplicates)
//! and validate each image with a visibility backtrace through the actual
//! face polygons. Both enumerations report every arrival through the same
//! callback, so frequency-flat and per-band consumers share the geometry.

use crate::acoustics::pulse::place_pulse;
use crate::acoustics::{
    surface_alphas, AcousticsError, ImageParams, SimParams, DEFAULT_POLYHEDRON_ORDER,
};
use crate::geometry::{Room, Scenario, Vec3};
use crate::num::Sample;

/// One reflection event (or a run of them, for shoebox walls hit repeatedly
/// along an unfolded path).
pub(crate) struct Hit<T> {
    pub surface: usize,
    /// |cos| of the incidence angle against the surface normal.
    pub cos_incidence: T,
    pub count: u32,
}

/// One image source that is visible from the receiver. The reflection
/// order is the sum of the hit counts.
pub(crate) struct Arrival<'a, T> {
    /// Unfolded path length in metres.
    pub distance: f64,
    pub hits: &'a [Hit<T>],
}

/// Enumerates every visible image with path length ≤ `max_distance` and
/// order ≤ `max_order` (`None`: unbounded for shoeboxes, where the time
/// truncation bounds the lattice, and [`DEFAULT_POLYHEDRON_ORDER`] for
/// polyhedra).
pub(crate) fn for_each_image<T: Sample>(
    room: &Room<T>,
    source: Vec3<T>,
    receiver: Vec3<T>,
    max_order: Option<u32>,
    max_distance: f64,
    f: impl FnMut(&Arrival<'_, T>),
) {
    match room.shoebox_dims() {
        Some(dims) => shoebox_images(dims, source, receiver, max_order, max_distance, f),
        None => polyhedron_images(
            room,
            source,
            receiver,
            max_order.unwrap_or(DEFAULT_POLYHEDRON_ORDER),
            max_distance,
            f,
        ),
    }
}

/// Mirror lattice for an axis-aligned shoebox.
///
/// Per axis, image coordinates are `2·m·L + (1−2q)·s` for `m ∈ ℤ`,
/// `q ∈ {0,1}`; the walls at `0` and `L` are hit `|m−q|` and `|m|` times.
fn shoebox_images<T: Sample>(
    dims: Vec3<T>,
    source: Vec3<T>,
    receiver: Vec3<T>,
    max_order: Option<u32>,
    max_distance: f64,
    mut f: impl FnMut(&Arrival<'_, T>),
) {
    let dims = dims.to_f64();
    let src = source.to_f64();
    let rcv = receiver.to_f64();
    let d_max_sq = max_distance * max_distance;

    // Axis offsets within range, each tagged with its reflection counts.
    let axis_offsets = |axis: usize| -> Vec<(f64, u32, u32)> {
        let (len, s, r) = (dims[axis], src[axis], rcv[axis]);
        let mut out = Vec::new();
        for q in 0..=1i64 {
            let mirrored = (1 - 2 * q) as f64 * s;
            // |2·m·len + mirrored − r| ≤ max_distance
            let mut m_lo = ((r - mirrored - max_distance) / (2.0 * len)).floor() as i64;
            let mut m_hi = ((r - mirrored + max_distance) / (2.0 * len)).ceil() as i64;
            if let Some(n) = max_order {
                m_lo = m_lo.max(-(n as i64));
                m_hi = m_hi.min(n as i64);
            }
            for m in m_lo..=m_hi {
                let delta = 2.0 * m as f64 * len + mirrored - r;
                if delta.abs() > max_distance {
                    continue;
                }
                let hits_wall0 = (m - q).unsigned_abs() as u32;
                let hits_wall1 = m.unsigned_abs() as u32;
                if let Some(n) = max_order {
                    if hits_wall0 + hits_wall1 > n {
                        continue;
                    }
                }
                out.push((delta, hits_wall0, hits_wall1));
            }
        }
        out
    };

    let xs = axis_offsets(0);
    let ys = axis_offsets(1);
    let zs = axis_offsets(2);
    let mut hits: Vec<Hit<T>> = Vec::with_capacity(6);

    for &(dx, x0, x1) in &xs {
        let dx_sq = dx * dx;
        if dx_sq > d_max_sq {
            continue;
        }
        let order_x = x0 + x1;
        for &(dy, y0, y1) in &ys {
            let dxy_sq = dx_sq + dy * dy;
            if dxy_sq > d_max_sq {
                continue;
            }
            let order_xy = order_x + y0 + y1;
            if max_order.is_some_and(|n| order_xy > n) {
                continue;
            }
            for &(dz, z0, z1) in &zs {
                let d_sq = dxy_sq + dz * dz;
                if d_sq > d_max_sq {
                    continue;
                }
                let order = order_xy + z0 + z1;
                if max_order.is_some_and(|n| order > n) {
                    continue;
                }
                let distance = d_sq.sqrt();
                hits.clear();
                for (surface, count, delta) in [
                    (0, x0, dx),
                    (1, x1, dx),
                    (2, y0, dy),
                    (3, y1, dy),
                    (4, z0, dz),
                    (5, z1, dz),
                ] {
                    if count > 0 {
                        hits.push(Hit {
                            surface,
                            cos_incidence: T::of(delta.abs() / distance),
                            count,
                        });
                    }
                }
                f(&Arrival {
                    distance,
                    hits: &hits,
                });
            }
        }
    }
}

struct PolyImage<T> {
    pos: Vec3<T>,
    parent: usize,
    surface: usize,
    order: u32,
}

/// Breadth-first image construction for a convex polyhedron, with a
/// visibility backtrace through the face polygons.
///
/// Distance pruning is sound for whole subtrees: reflecting an image across
/// a plane the receiver is inside never brings it closer to the receiver.
fn polyhedron_images<T: Sample>(
    room: &Room<T>,
    source: Vec3<T>,
    receiver: Vec3<T>,
    max_order: u32,
    max_distance: f64,
    mut f: impl FnMut(&Arrival<'_, T>),
) {
    let surfaces = room.surfaces();
    let (lo, hi) = room.bounding_box();
    let tol = (hi - lo).norm() * T::epsilon().sqrt();
    let max_dist_t = T::of(max_distance);

    let mut arena = vec![PolyImage {
        pos: source,
        parent: usize::MAX,
        surface: usize::MAX,
        order: 0,
    }];
    let mut level_start = 0;
    for _ in 0..max_order {
        let level_end = arena.len();
        for i in level_start..level_end {
            for (s_idx, s) in surfaces.iter().enumerate() {
                // Only reflect images that sit strictly inside this plane;
                // an image already outside it came *from* that side, and
                // reflecting it back would duplicate an ancestor.
                if s.signed_distance(arena[i].pos) >= -tol {
                    continue;
                }
                let pos = s.reflect(arena[i].pos);
                if pos.distance(receiver) > max_dist_t {
                    continue;
                }
                arena.push(PolyImage {
                    pos,
                    parent: i,
                    surface: s_idx,
                    order: arena[i].order + 1,
                });
            }
        }
        level_start = level_end;
    }

    let mut hits: Vec<Hit<T>> = Vec::new();
    'images: for img in &arena {
        let distance = img.pos.distance(receiver);
        if distance > max_dist_t {
            continue;
        }
        hits.clear();
        let mut p = receiver;
        let mut cur = img;
        while cur.order > 0 {
            let s = &surfaces[cur.surface];
            let to_image = cur.pos - p;
            let denom = s.normal.dot(to_image);
            if denom.abs() <= T::epsilon() {
                continue 'images;
            }
            let t = -s.signed_distance(p) / denom;
            if t <= T::zero() || t >= T::one() {
                continue 'images;
            }
            let hit_point = p + to_image * t;
            if !s.polygon_contains(hit_point, tol) {
                continue 'images;
            }
            hits.push(Hit {
                surface: cur.surface,
                cos_incidence: (denom / to_image.norm()).abs(),
                count: 1,
            });
            p = hit_point;
            cur = &arena[cur.parent];
        }
        f(&Arrival {
            distance: distance.as_f64(),
            hits: &hits,
        });
    }
}

/// Frequency-flat image-source model: each visible image contributes
/// `Π √(1−α) / (4πd)` at delay `d/c`.
pub(crate) fn simulate<T: Sample>(
    scenario: &Scenario<T>,
    model: &ImageParams,
    params: &SimParams,
    n_samples: usize,
) -> Result<Vec<T>, AcousticsError> {
    let alphas = surface_alphas(
        &scenario.room,
        scenario.rt60_target.as_f64(),
        params.speed_of_sound,
        1,
    )?;
    let betas: Vec<f64> = alphas
        .iter()
        .map(|a| (1.0 - a[0].as_f64()).max(0.0).sqrt())
        .collect();

    let fs = params.sample_rate as f64;
    let c = params.speed_of_sound;
    let max_distance = c * (n_samples as f64 + 16.0) / fs;

    let mut buf = vec![T::zero(); n_samples];
    for_each_image(
        &scenario.room,
        scenario.source,
        scenario.receiver,
        model.max_order,
        max_distance,
        |arrival| {
            let mut amp = 1.0 / (4.0 * std::f64::consts::PI * arrival.distance);
            for hit in arrival.hits {
                amp *= betas[hit.surface].powi(hit.count as i32);
            }
            if amp != 0.0 {
                place_pulse(&mut buf, arrival.distance / c * fs, amp);
            }
        },
    );
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{shoebox_mesh, Absorption, AbsorptionSpec};

    fn shoebox_scenario(alpha: f64) -> Scenario<f64> {
        Scenario {
            id: "t".into(),
            room: Room::shoebox(
                Vec3::new(5.0, 4.0, 3.0),
                AbsorptionSpec::Uniform(Absorption::Scalar(alpha)),
            )
            .unwrap(),
            source: Vec3::new(1.2, 1.1, 1.3),
            receiver: Vec3::new(3.4, 2.9, 1.7),
            rt60_target: 0.5,
            seed: 0,
        }
    }

    /// Arrivals as `(distance, order, sorted wall multiset)`. The lattice
    /// merges repeated wall hits into counts while the reflected walk emits
    /// them singly, so the expanded multiset is the canonical form. Two
    /// distinct images can sit at exactly the same distance; the quantized
    /// sort key keeps such ties ordered identically for both enumerations.
    fn collect_arrivals(
        room: &Room<f64>,
        src: Vec3<f64>,
        rcv: Vec3<f64>,
        order: Option<u32>,
        max_d: f64,
    ) -> Vec<(f64, u32, Vec<usize>)> {
        let mut out = Vec::new();
        for_each_image(room, src, rcv, order, max_d, |a| {
            let mut walls: Vec<usize> = Vec::new();
            for h in a.hits {
                walls.extend(std::iter::repeat(h.surface).take(h.count as usize));
            }
            walls.sort_unstable();
            out.push((a.distance, walls.len() as u32, walls));
        });
        out.sort_by_key(|(d, o, h)| (((d * 1e6).round()) as i64, *o, h.clone()));
        out
    }

    #[test]
    fn order_zero_is_the_direct_path_only() {
        let sc = shoebox_scenario(0.3);
        let arrivals = collect_arrivals(&sc.room, sc.source, sc.receiver, Some(0), 1e3);
        assert_eq!(arrivals.len(), 1);
        let want = sc.source.distance(sc.receiver);
        assert!((arrivals[0].0 - want).abs() < 1e-12);
        assert_eq!(arrivals[0].1, 0);
        assert!(arrivals[0].2.is_empty());
    }

    #[test]
    fn first_order_count_and_distances() {
        // Order ≤ 1 in a shoebox: direct + one image per wall.
        let sc = shoebox_scenario(0.3);
        let arrivals = collect_arrivals(&sc.room, sc.source, sc.receiver, Some(1), 1e3);
        assert_eq!(arrivals.len(), 7);
        // The floor image: source mirrored to z = −1.3.
        let img = Vec3::new(1.2, 1.1, -1.3);
        let want = img.distance(sc.receiver);
        assert!(
            arrivals
                .iter()
                .any(|(d, o, h)| *o == 1 && h == &vec![4] && (d - want).abs() < 1e-12),
            "floor image missing"
        );
    }

    #[test]
    fn lattice_count_matches_the_order_formula() {
        // Images with order ≤ N per axis combine to Σ counts; for N = 2 the
        // number of images in a shoebox is 25 (1 + 6 + 18).
        let sc = shoebox_scenario(0.3);
        for (order, want) in [(0, 1), (1, 7), (2, 25)] {
            let got = collect_arrivals(&sc.room, sc.source, sc.receiver, Some(order), 1e4).len();
            assert_eq!(got, want, "order {order}");
        }
    }

    #[test]
    fn polyhedron_enumeration_matches_lattice() {
        let dims = Vec3::new(5.0, 4.0, 3.0);
        let (vertices, faces) = shoebox_mesh(dims);
        let poly = Room::polyhedron(
            vertices,
            &faces,
            AbsorptionSpec::Uniform(Absorption::Scalar(0.3)),
        )
        .unwrap();
        let sc = shoebox_scenario(0.3);
        let src = sc.source;
        let rcv = sc.receiver;
        for order in [0u32, 1, 2, 3] {
            let a = collect_arrivals(&sc.room, src, rcv, Some(order), 1e4);
            let b = collect_arrivals(&poly, src, rcv, Some(order), 1e4);
            assert_eq!(a.len(), b.len(), "image count at order {order}");
            for (x, y) in a.iter().zip(&b) {
                assert!((x.0 - y.0).abs() < 1e-9, "distance {} vs {}", x.0, y.0);
                assert_eq!(x.1, y.1, "order of arrival at distance {}", x.0);
                // Same walls hit the same number of times.
                assert_eq!(x.2, y.2, "walls at distance {}", x.0);
            }
        }
    }

    #[test]
    fn incidence_cosines_match_between_paths() {
        let dims = Vec3::new(5.0, 4.0, 3.0);
        let (vertices, faces) = shoebox_mesh(dims);
        let poly = Room::polyhedron(
            vertices,
            &faces,
            AbsorptionSpec::Uniform(Absorption::Scalar(0.3)),
        )
        .unwrap();
        let sc = shoebox_scenario(0.3);

        let gather = |room: &Room<f64>| {
            let mut out: Vec<(i64, usize, i64)> = Vec::new();
            for_each_image(room, sc.source, sc.receiver, Some(2), 1e4, |a| {
                for h in a.hits {
                    for _ in 0..h.count {
                        out.push((
                            (a.distance * 1e6).round() as i64,
                            h.surface,
                            (h.cos_incidence * 1e6).round() as i64,
                        ));
                    }
                }
            });
            out.sort_unstable();
            out
        };
        assert_eq!(gather(&sc.room), gather(&poly));
    }

    #[test]
    fn distance_truncation_prunes_far_images() {
        let sc = shoebox_scenario(0.3);
        let close = collect_arrivals(&sc.room, sc.source, sc.receiver, None, 20.0);
        assert!(close.iter().all(|(d, _, _)| *d <= 20.0));
        assert!(close.len() > 7, "several reflections within 20 m");
        let closer = collect_arrivals(&sc.room, sc.source, sc.receiver, None, 10.0);
        assert!(closer.len() < close.len());
    }

    #[test]
    fn fully_absorbing_walls_leave_only_the_direct_pulse() {
        let sc = shoebox_scenario(1.0);
        let params = SimParams::default();
        let rir = simulate(&sc, &ImageParams { max_order: None }, &params, 4_000).unwrap();
        let d = sc.source.distance(sc.receiver);
        let direct_idx = (d / 343.0 * 16_000.0).round() as usize;
        let direct_energy: f64 = rir
            [direct_idx.saturating_sub(16)..(direct_idx + 17).min(rir.len())]
            .iter()
            .map(|s| s * s)
            .sum();
        let tail_energy: f64 = rir[(direct_idx + 17).min(rir.len())..]
            .iter()
            .map(|s| s * s)
            .sum();
        assert!(direct_energy > 0.0);
        assert!(
            tail_energy <= 1e-6 * direct_energy,
            "tail {tail_energy} vs direct {direct_energy}"
        );
    }

    #[test]
    fn direct_amplitude_is_inverse_distance() {
        // Pick a placement with an integer-sample direct delay so the pulse
        // is a single tap: d = 343·k/16000 for k = 100 → d = 2.14375 m.
        let d = 343.0 * 100.0 / 16_000.0;
        let sc = Scenario {
            id: "t".into(),
            room: Room::shoebox(
                Vec3::new(6.0, 4.0, 3.0),
                AbsorptionSpec::Uniform(Absorption::Scalar(1.0)),
            )
            .unwrap(),
            source: Vec3::new(1.0, 2.0, 1.5),
            receiver: Vec3::new(1.0 + d, 2.0, 1.5),
            rt60_target: 0.5,
            seed: 0,
        };
        let rir = simulate(
            &sc,
            &ImageParams { max_order: Some(0) },
            &SimParams::default(),
            4_000,
        )
        .unwrap();
        let want = 1.0 / (4.0 * std::f64::consts::PI * d);
        assert!((rir[100] - want).abs() <= 1e-9 * want, "{} vs {want}", rir[100]);
    }
}

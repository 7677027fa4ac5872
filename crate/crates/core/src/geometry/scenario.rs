use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::room::{AbsorptionSpec, GeometryError, Room};
use crate::geometry::Vec3;
use crate::num::Sample;
use crate::seed::derive_seed;

/// Minimum clearance between a source/receiver and any surface (metres).
pub const WALL_MARGIN: f64 = 0.05;
/// Minimum source–receiver separation (metres).
pub const MIN_SEPARATION: f64 = 0.5;
/// Placement rejection-sampling budget per scenario.
const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// One simulation case: a room with a source/receiver placement, a target
/// reverberation time, and the seed that drives any stochastic model parts.
#[derive(Clone, Debug)]
pub struct Scenario<T> {
    pub id: String,
    pub room: Room<T>,
    pub source: Vec3<T>,
    pub receiver: Vec3<T>,
    /// Target broadband RT60 in seconds; absorption is derived from this
    /// when the room does not specify coefficients explicitly.
    pub rt60_target: T,
    pub seed: u64,
}

/// Configuration for [`sample_scenarios`]. Defaults reproduce the augmentation
/// recipe this toolkit is built around: 3–20 m shoeboxes, sources and
/// receivers at 1–2 m height with ≥ 0.5 m separation, RT60 0.1–1 s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_rooms: usize,
    pub placements_per_room: usize,
    /// Uniform range for each shoebox dimension (metres).
    pub dim_range: (f64, f64),
    /// Uniform range for source/receiver height (metres).
    pub height_range: (f64, f64),
    /// Uniform range for the per-room RT60 target (seconds).
    pub rt60_range: (f64, f64),
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_rooms: 50,
            placements_per_room: 20,
            dim_range: (3.0, 20.0),
            height_range: (1.0, 2.0),
            rt60_range: (0.1, 1.0),
            seed: 0,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<(), GeometryError> {
        let ranges = [
            ("dimension", self.dim_range),
            ("height", self.height_range),
            ("rt60", self.rt60_range),
        ];
        for (what, (lo, hi)) in ranges {
            if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi < lo {
                return Err(GeometryError::BadRange { what, lo, hi });
            }
        }
        if self.n_rooms == 0 || self.placements_per_room == 0 {
            return Err(GeometryError::BadConfig(
                "n_rooms and placements_per_room must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Draws `n_rooms × placements_per_room` scenarios.
///
/// Room dimensions and the RT60 target are drawn once per room; placements
/// are drawn per scenario by rejection sampling against the wall margin and
/// separation constraints. Every random draw comes from a ChaCha stream
/// seeded via [`derive_seed`] on the (room, placement) indices, so any
/// scenario can be regenerated in isolation and results do not depend on
/// iteration order.
pub fn sample_scenarios<T: Sample>(
    config: &SamplerConfig,
) -> Result<Vec<Scenario<T>>, GeometryError> {
    config.validate()?;
    let mut scenarios = Vec::with_capacity(config.n_rooms * config.placements_per_room);
    for room_idx in 0..config.n_rooms {
        let mut room_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[room_idx as u64]));
        let dim = Uniform::new_inclusive(config.dim_range.0, config.dim_range.1);
        let dims = [
            dim.sample(&mut room_rng),
            dim.sample(&mut room_rng),
            dim.sample(&mut room_rng),
        ];
        let rt60 = Uniform::new_inclusive(config.rt60_range.0, config.rt60_range.1)
            .sample(&mut room_rng);
        let room = Room::shoebox(Vec3::from_f64(dims), AbsorptionSpec::FromRt60)?;

        // Height range clipped to this room's interior (with wall margin).
        let h_lo = config.height_range.0.max(WALL_MARGIN);
        let h_hi = config.height_range.1.min(dims[2] - WALL_MARGIN);
        if h_hi < h_lo {
            return Err(GeometryError::HeightRangeInfeasible {
                lo: config.height_range.0,
                hi: config.height_range.1,
            });
        }

        for place_idx in 0..config.placements_per_room {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.seed,
                &[room_idx as u64, place_idx as u64, 0],
            ));
            let x = Uniform::new_inclusive(WALL_MARGIN, dims[0] - WALL_MARGIN);
            let y = Uniform::new_inclusive(WALL_MARGIN, dims[1] - WALL_MARGIN);
            let h = Uniform::new_inclusive(h_lo, h_hi);

            let mut found = None;
            for _ in 0..MAX_PLACEMENT_ATTEMPTS {
                let src = [x.sample(&mut rng), y.sample(&mut rng), h.sample(&mut rng)];
                let rcv = [x.sample(&mut rng), y.sample(&mut rng), h.sample(&mut rng)];
                let dx = src[0] - rcv[0];
                let dy = src[1] - rcv[1];
                let dz = src[2] - rcv[2];
                if (dx * dx + dy * dy + dz * dz).sqrt() >= MIN_SEPARATION {
                    found = Some((src, rcv));
                    break;
                }
            }
            let (src, rcv) = found.ok_or(GeometryError::PlacementExhausted {
                room_index: room_idx,
                attempts: MAX_PLACEMENT_ATTEMPTS,
                dims,
            })?;

            scenarios.push(Scenario {
                id: format!("r{room_idx:03}p{place_idx:02}"),
                room: room.clone(),
                source: Vec3::from_f64(src),
                receiver: Vec3::from_f64(rcv),
                rt60_target: T::of(rt60),
                seed: derive_seed(config.seed, &[room_idx as u64, place_idx as u64, 1]),
            });
        }
    }
    Ok(scenarios)
}

/// Why a placement is invalid.
#[derive(Clone, Debug, PartialEq)]
pub enum PlacementViolation {
    /// Source is outside the room or closer than the margin to a surface.
    SourceTooCloseToSurface { clearance: f64 },
    /// Receiver is outside the room or closer than the margin to a surface.
    ReceiverTooCloseToSurface { clearance: f64 },
    /// Source and receiver are closer than the minimum separation.
    SeparationTooSmall { distance: f64 },
}

impl std::fmt::Display for PlacementViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlacementViolation::SourceTooCloseToSurface { clearance } => write!(
                f,
                "source clearance {clearance:.3} m is below the {WALL_MARGIN} m margin"
            ),
            PlacementViolation::ReceiverTooCloseToSurface { clearance } => write!(
                f,
                "receiver clearance {clearance:.3} m is below the {WALL_MARGIN} m margin"
            ),
            PlacementViolation::SeparationTooSmall { distance } => write!(
                f,
                "source-receiver distance {distance:.3} m is below {MIN_SEPARATION} m"
            ),
        }
    }
}

/// Result of [`validate_placement`]: `ok` iff `violations` is empty.
#[derive(Clone, Debug)]
pub struct PlacementCheck {
    pub ok: bool,
    pub violations: Vec<PlacementViolation>,
}

/// Checks a source/receiver placement against the wall-margin and
/// separation constraints, naming every violated constraint.
pub fn validate_placement<T: Sample>(
    room: &Room<T>,
    source: Vec3<T>,
    receiver: Vec3<T>,
) -> PlacementCheck {
    let mut violations = Vec::new();
    let clearance = |p: Vec3<T>| -> f64 {
        room.surfaces()
            .iter()
            .map(|s| -s.signed_distance(p))
            .fold(T::infinity(), T::min)
            .as_f64()
    };

    let src_clear = clearance(source);
    if src_clear < WALL_MARGIN {
        violations.push(PlacementViolation::SourceTooCloseToSurface {
            clearance: src_clear,
        });
    }
    let rcv_clear = clearance(receiver);
    if rcv_clear < WALL_MARGIN {
        violations.push(PlacementViolation::ReceiverTooCloseToSurface {
            clearance: rcv_clear,
        });
    }
    let dist = source.distance(receiver).as_f64();
    if dist < MIN_SEPARATION {
        violations.push(PlacementViolation::SeparationTooSmall { distance: dist });
    }

    PlacementCheck {
        ok: violations.is_empty(),
        violations,
    }
}

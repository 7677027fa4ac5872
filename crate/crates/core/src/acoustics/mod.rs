//! Room impulse response simulation.
//!
//! Five model families, all producing a [`Rir`] whose direct path is scaled
//! `1/(4πd)` so levels are comparable across models:
//!
//! * [`RirModel::Image`] — specular image sources (exact lattice for
//!   shoeboxes, reflect-and-validate enumeration for convex polyhedra).
//! * [`RirModel::Hybrid`] — low-order images plus a stochastic ray-traced
//!   late tail, crossfaded at a transition time.
//! * [`RirModel::BandedReflection`] — image sources with per-octave-band,
//!   incidence-angle-dependent reflection coefficients.
//! * [`RirModel::ModalLowFreq`] — modal sum below a crossover frequency,
//!   banded image sources above it.
//! * [`RirModel::Diffusion`] — energy diffusion equation on a voxel grid for
//!   the late field, images for the early part.

pub mod analysis;
mod banded;
mod diffusion;
mod filterbank;
mod hybrid;
mod image;
mod modal;
mod pulse;
mod ray;
mod tail;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Absorption, AbsorptionSpec, GeometryError, Room, Scenario};
use crate::num::Sample;

pub use analysis::{analyze_rir, RirAnalysis, DEFAULT_FIT_RANGE_DB};
pub use banded::reflection_coefficient;
pub use filterbank::{low_pass_kernel, FilterBank, DEFAULT_BAND_CENTERS_HZ};
pub use pulse::{place_pulse, pulse_kernel, PULSE_HALF_WIDTH};

pub const SPEED_OF_SOUND: f64 = 343.0;
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Global simulation parameters shared by every model.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Speed of sound in m/s.
    pub speed_of_sound: f64,
    /// Output sample rate in Hz.
    pub sample_rate: u32,
    /// RIR duration in seconds; `None` → `max(1.2 × RT60 target, 0.25 s)`.
    pub rir_seconds: Option<f64>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            speed_of_sound: SPEED_OF_SOUND,
            sample_rate: DEFAULT_SAMPLE_RATE,
            rir_seconds: None,
        }
    }
}

impl SimParams {
    fn validate(&self) -> Result<(), AcousticsError> {
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return Err(AcousticsError::InvalidParam {
                what: "speed_of_sound",
                value: self.speed_of_sound,
            });
        }
        if self.sample_rate == 0 {
            return Err(AcousticsError::InvalidParam {
                what: "sample_rate",
                value: 0.0,
            });
        }
        if let Some(len) = self.rir_seconds {
            if !(len.is_finite() && len > 0.0) {
                return Err(AcousticsError::InvalidParam {
                    what: "rir_seconds",
                    value: len,
                });
            }
        }
        Ok(())
    }

    /// RIR duration for a scenario, applying the RT60-based default.
    pub fn rir_seconds_for(&self, rt60_target: f64) -> f64 {
        self.rir_seconds
            .unwrap_or_else(|| (1.2 * rt60_target).max(0.25))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ImageParams {
    /// Highest reflection order; `None` keeps every image that arrives
    /// within the RIR length (shoebox) or falls back to
    /// [`DEFAULT_POLYHEDRON_ORDER`] (polyhedron).
    pub max_order: Option<u32>,
}

impl Default for ImageParams {
    fn default() -> Self {
        ImageParams { max_order: None }
    }
}

/// Reflection-order cap for polyhedron rooms when none is given: the
/// enumeration grows exponentially with order, unlike the shoebox lattice.
pub const DEFAULT_POLYHEDRON_ORDER: u32 = 6;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct HybridParams {
    /// Reflection order handled by image sources before the ray tail.
    pub image_order: u32,
    /// Number of stochastic rays.
    pub rays: usize,
    /// Width of the energy-histogram time bins in seconds.
    pub bin_seconds: f64,
    /// Radius of the spherical receiver used by the ray tracer, metres.
    pub receiver_radius: f64,
    /// Early/late transition time in seconds; `None` → direct delay plus
    /// 2.5 mean-free-path times.
    pub transition_seconds: Option<f64>,
    /// Raised-cosine crossfade width around the transition, seconds.
    pub crossfade_seconds: f64,
}

impl Default for HybridParams {
    fn default() -> Self {
        HybridParams {
            image_order: 2,
            rays: 10_000,
            bin_seconds: 1e-3,
            receiver_radius: 0.5,
            transition_seconds: None,
            crossfade_seconds: 5e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BandedParams {
    /// Octave-band centre frequencies, strictly increasing, Hz.
    pub band_centers_hz: Vec<f64>,
    /// Reflection-order cap, as in [`ImageParams`].
    pub max_order: Option<u32>,
    /// Length of the linear-phase band filters (odd).
    pub filter_taps: usize,
}

impl Default for BandedParams {
    fn default() -> Self {
        BandedParams {
            band_centers_hz: DEFAULT_BAND_CENTERS_HZ.to_vec(),
            max_order: None,
            filter_taps: 511,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ModalParams {
    /// Below this frequency the field is a modal sum (shoebox only).
    pub crossover_hz: f64,
    /// Modes are summed up to `max_mode_freq_factor × crossover_hz`.
    pub max_mode_freq_factor: f64,
    /// Banded image model used above the crossover.
    pub banded: BandedParams,
}

impl Default for ModalParams {
    fn default() -> Self {
        ModalParams {
            crossover_hz: 250.0,
            max_mode_freq_factor: 1.25,
            banded: BandedParams::default(),
        }
    }
}

/// Boundary exchange coefficient used by the diffusion model.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeModel {
    /// `h = cα/4`. Underestimates decay for mid/high absorption; kept as an
    /// option for comparison.
    Sabine,
    /// `h = −c·ln(1−α)/4`. Consistent with the Eyring RT60 mapping used to
    /// derive absorption from targets, so it is the default.
    Eyring,
    /// `h = cα / (2(2−α))`.
    Modified,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionParams {
    /// Voxel edge length in metres.
    pub grid_spacing: f64,
    /// Explicit time step in seconds; `None` derives one from the stability
    /// bound. A step above the bound is a configuration error.
    pub time_step: Option<f64>,
    /// Image-source order for the early part of the response.
    pub image_order: u32,
    pub exchange: ExchangeModel,
    /// Raised-cosine fade-in of the diffuse tail after the last early
    /// arrival, seconds.
    pub fade_seconds: f64,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        DiffusionParams {
            grid_spacing: 0.5,
            time_step: None,
            image_order: 1,
            exchange: ExchangeModel::Eyring,
            fade_seconds: 5e-3,
        }
    }
}

/// Model selector plus its parameters; serialises with a `"model"` tag so
/// run configs stay readable.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum RirModel {
    Image(ImageParams),
    Hybrid(HybridParams),
    BandedReflection(BandedParams),
    ModalLowFreq(ModalParams),
    Diffusion(DiffusionParams),
}

impl RirModel {
    pub fn name(&self) -> &'static str {
        match self {
            RirModel::Image(_) => "image",
            RirModel::Hybrid(_) => "hybrid",
            RirModel::BandedReflection(_) => "banded_reflection",
            RirModel::ModalLowFreq(_) => "modal_low_freq",
            RirModel::Diffusion(_) => "diffusion",
        }
    }

    fn validate(&self, sample_rate: u32) -> Result<(), AcousticsError> {
        let positive = |what: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(AcousticsError::InvalidParam { what, value })
            }
        };
        match self {
            RirModel::Image(_) => Ok(()),
            RirModel::Hybrid(p) => {
                if p.rays == 0 {
                    return Err(AcousticsError::InvalidParam {
                        what: "rays",
                        value: 0.0,
                    });
                }
                positive("bin_seconds", p.bin_seconds)?;
                positive("receiver_radius", p.receiver_radius)?;
                positive("crossfade_seconds", p.crossfade_seconds)?;
                if let Some(t) = p.transition_seconds {
                    positive("transition_seconds", t)?;
                }
                Ok(())
            }
            RirModel::BandedReflection(p) => validate_bands(p, sample_rate),
            RirModel::ModalLowFreq(p) => {
                positive("crossover_hz", p.crossover_hz)?;
                if p.crossover_hz >= sample_rate as f64 / 2.0 {
                    return Err(AcousticsError::BandAboveNyquist {
                        edge: p.crossover_hz,
                        nyquist: sample_rate as f64 / 2.0,
                    });
                }
                if !(p.max_mode_freq_factor.is_finite() && p.max_mode_freq_factor >= 1.0) {
                    return Err(AcousticsError::InvalidParam {
                        what: "max_mode_freq_factor",
                        value: p.max_mode_freq_factor,
                    });
                }
                validate_bands(&p.banded, sample_rate)
            }
            RirModel::Diffusion(p) => {
                positive("grid_spacing", p.grid_spacing)?;
                positive("fade_seconds", p.fade_seconds)?;
                if let Some(dt) = p.time_step {
                    positive("time_step", dt)?;
                }
                Ok(())
            }
        }
    }
}

fn validate_bands(p: &BandedParams, sample_rate: u32) -> Result<(), AcousticsError> {
    if p.band_centers_hz.is_empty() {
        return Err(AcousticsError::InvalidParam {
            what: "band_centers_hz",
            value: 0.0,
        });
    }
    if p.filter_taps < 3 || p.filter_taps % 2 == 0 {
        return Err(AcousticsError::InvalidParam {
            what: "filter_taps",
            value: p.filter_taps as f64,
        });
    }
    let nyquist = sample_rate as f64 / 2.0;
    let mut prev = 0.0;
    for &c in &p.band_centers_hz {
        if !(c.is_finite() && c > 0.0) {
            return Err(AcousticsError::InvalidParam {
                what: "band_centers_hz",
                value: c,
            });
        }
        if c <= prev {
            return Err(AcousticsError::BandsNotIncreasing);
        }
        prev = c;
    }
    // Interior band edges must stay below Nyquist; the top band extends to
    // Nyquist by construction.
    for pair in p.band_centers_hz.windows(2) {
        let edge = (pair[0] * pair[1]).sqrt();
        if edge >= nyquist {
            return Err(AcousticsError::BandAboveNyquist { edge, nyquist });
        }
    }
    Ok(())
}

/// A simulated impulse response.
#[derive(Clone, Debug)]
pub struct Rir<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
    pub scenario_id: String,
    pub model: RirModel,
    /// Sample index of the direct arrival, `round(d·fs/c)`.
    pub direct_index: usize,
}

impl<T: Sample> Rir<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sum of squared samples, accumulated in f64.
    pub fn energy(&self) -> f64 {
        self.samples
            .iter()
            .map(|&s| {
                let s = s.as_f64();
                s * s
            })
            .sum()
    }

    /// Index of the largest-magnitude sample.
    pub fn peak_index(&self) -> usize {
        self.samples
            .iter()
            .enumerate()
            .max_by(|a, b| {
                a.1.abs()
                    .partial_cmp(&b.1.abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map_or(0, |(i, _)| i)
    }

    /// Checks the structural invariants: non-empty, finite, positive energy,
    /// direct index in range, and the peak within ±1 sample of the direct
    /// arrival.
    pub fn validate(&self) -> Result<(), AcousticsError> {
        if self.samples.is_empty() {
            return Err(AcousticsError::EmptyRir);
        }
        if self.samples.iter().any(|s| !s.is_finite()) {
            return Err(AcousticsError::Invariant("RIR contains non-finite samples"));
        }
        if self.energy() <= 0.0 {
            return Err(AcousticsError::Invariant("RIR has zero energy"));
        }
        if self.direct_index >= self.samples.len() {
            return Err(AcousticsError::Invariant(
                "direct arrival lies beyond the RIR length",
            ));
        }
        let peak = self.peak_index();
        if peak.abs_diff(self.direct_index) > 1 {
            return Err(AcousticsError::Invariant(
                "RIR peak is not at the direct arrival",
            ));
        }
        Ok(())
    }
}

/// How a broadband RT60 target maps to a uniform absorption coefficient.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Rt60Mapping {
    Sabine,
    Eyring,
}

/// Uniform absorption coefficient that realises `rt60` in `room`, using the
/// Eyring relation at the default speed of sound.
pub fn absorption_from_rt60<T: Sample>(room: &Room<T>, rt60: f64) -> Result<f64, AcousticsError> {
    absorption_from_rt60_with(room, rt60, SPEED_OF_SOUND, Rt60Mapping::Eyring)
}

/// As [`absorption_from_rt60`] with explicit speed of sound and mapping.
///
/// Both mappings share the Sabine feasibility bound: the shortest achievable
/// RT60 is `24·ln(10)·V/(c·S)` (Sabine absorption of 1); targets below it are
/// rejected, naming that bound.
pub fn absorption_from_rt60_with<T: Sample>(
    room: &Room<T>,
    rt60: f64,
    speed_of_sound: f64,
    mapping: Rt60Mapping,
) -> Result<f64, AcousticsError> {
    if !(rt60.is_finite() && rt60 > 0.0) {
        return Err(AcousticsError::InvalidParam {
            what: "rt60",
            value: rt60,
        });
    }
    let (surface, volume) = room.surface_and_volume();
    let (surface, volume) = (surface.as_f64(), volume.as_f64());
    // Sabine: rt60 = 24·ln(10)/c · V / (S·α)  (the familiar 0.161·V/(S·α)).
    let sabine_alpha = 24.0 * std::f64::consts::LN_10 * volume / (speed_of_sound * surface * rt60);
    if sabine_alpha >= 1.0 {
        return Err(AcousticsError::InfeasibleRt60 {
            rt60,
            min_rt60: 24.0 * std::f64::consts::LN_10 * volume / (speed_of_sound * surface),
        });
    }
    Ok(match mapping {
        Rt60Mapping::Sabine => sabine_alpha,
        // Eyring: rt60 = 24·ln(10)/c · V / (S·(−ln(1−α))).
        Rt60Mapping::Eyring => 1.0 - (-sabine_alpha).exp(),
    })
}

/// Per-surface, per-band absorption actually used by a simulation:
/// `result[surface][band]`.
///
/// Rooms with [`AbsorptionSpec::FromRt60`] get a uniform Eyring-derived
/// coefficient. Scalar coefficients are replicated across bands; banded
/// coefficients must match `n_bands` when a banded model asks for more than
/// one band, and collapse to their mean for single-band models.
pub(crate) fn surface_alphas<T: Sample>(
    room: &Room<T>,
    rt60_target: f64,
    speed_of_sound: f64,
    n_bands: usize,
) -> Result<Vec<Vec<T>>, AcousticsError> {
    let n_surfaces = room.surfaces().len();
    let expand = |a: &Absorption<T>| -> Result<Vec<T>, AcousticsError> {
        match a {
            Absorption::Scalar(v) => Ok(vec![*v; n_bands]),
            Absorption::Banded(bands) if n_bands == 1 => {
                let mean = bands.iter().copied().sum::<T>() / T::of(bands.len() as f64);
                Ok(vec![mean])
            }
            Absorption::Banded(bands) => {
                if bands.len() != n_bands {
                    return Err(AcousticsError::AbsorptionBandMismatch {
                        expected: n_bands,
                        got: bands.len(),
                    });
                }
                Ok(bands.clone())
            }
        }
    };
    match room.absorption() {
        AbsorptionSpec::FromRt60 => {
            let alpha = absorption_from_rt60_with(
                room,
                rt60_target,
                speed_of_sound,
                Rt60Mapping::Eyring,
            )?;
            Ok(vec![vec![T::of(alpha); n_bands]; n_surfaces])
        }
        AbsorptionSpec::Uniform(a) => Ok(vec![expand(a)?; n_surfaces]),
        AbsorptionSpec::PerSurface(list) => list.iter().map(expand).collect(),
    }
}

/// Area-weighted mean of per-surface single-band coefficients.
pub(crate) fn mean_alpha<T: Sample>(room: &Room<T>, alphas: &[Vec<T>], band: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, a) in room.surfaces().iter().zip(alphas) {
        num += s.area.as_f64() * a[band].as_f64();
        den += s.area.as_f64();
    }
    num / den
}

/// Simulates the impulse response for one scenario.
pub fn simulate_rir<T: Sample>(
    scenario: &Scenario<T>,
    model: &RirModel,
    params: &SimParams,
) -> Result<Rir<T>, AcousticsError> {
    params.validate()?;
    model.validate(params.sample_rate)?;
    if !scenario.room.contains(scenario.source, T::zero()) {
        return Err(AcousticsError::PlacementOutsideRoom("source"));
    }
    if !scenario.room.contains(scenario.receiver, T::zero()) {
        return Err(AcousticsError::PlacementOutsideRoom("receiver"));
    }
    // The point-source amplitude 1/(4πd) blows up as the receiver approaches
    // the source; coincident placements are configuration errors.
    let separation = scenario.source.distance(scenario.receiver).as_f64();
    if separation < 1e-3 {
        return Err(AcousticsError::InvalidParam {
            what: "source-receiver separation (metres)",
            value: separation,
        });
    }

    let rt60_target = scenario.rt60_target.as_f64();
    let duration = params.rir_seconds_for(rt60_target);
    let n_samples = (duration * params.sample_rate as f64).round() as usize;
    if n_samples == 0 {
        return Err(AcousticsError::InvalidParam {
            what: "rir_seconds",
            value: duration,
        });
    }

    let samples = match model {
        RirModel::Image(p) => image::simulate(scenario, p, params, n_samples)?,
        RirModel::Hybrid(p) => hybrid::simulate(scenario, p, params, n_samples)?,
        RirModel::BandedReflection(p) => banded::simulate(scenario, p, params, n_samples)?,
        RirModel::ModalLowFreq(p) => modal::simulate(scenario, p, params, n_samples)?,
        RirModel::Diffusion(p) => diffusion::simulate(scenario, p, params, n_samples)?,
    };

    let direct_delay =
        scenario.source.distance(scenario.receiver).as_f64() / params.speed_of_sound;
    let direct_index = (direct_delay * params.sample_rate as f64).round() as usize;
    let rir = Rir {
        samples,
        sample_rate: params.sample_rate,
        scenario_id: scenario.id.clone(),
        model: model.clone(),
        direct_index: direct_index.min(n_samples.saturating_sub(1)),
    };
    if rir.is_empty() || rir.samples.iter().any(|s| !s.is_finite()) || rir.energy() <= 0.0 {
        return Err(AcousticsError::EmptyRir);
    }
    Ok(rir)
}

#[derive(Debug, Error)]
pub enum AcousticsError {
    #[error("parameter {what} has invalid value {value}")]
    InvalidParam { what: &'static str, value: f64 },
    #[error(
        "RT60 target {rt60} s is infeasible for this room; even fully absorbing \
         surfaces only reach {min_rt60:.4} s"
    )]
    InfeasibleRt60 { rt60: f64, min_rt60: f64 },
    #[error("band centres must be strictly increasing")]
    BandsNotIncreasing,
    #[error("band edge {edge:.1} Hz is at or above the Nyquist frequency {nyquist:.1} Hz")]
    BandAboveNyquist { edge: f64, nyquist: f64 },
    #[error("banded absorption has {got} coefficients but the model uses {expected} bands")]
    AbsorptionBandMismatch { expected: usize, got: usize },
    #[error("{0} lies outside the room")]
    PlacementOutsideRoom(&'static str),
    #[error(
        "diffusion time step {dt:.3e} s exceeds the stability bound {max_dt:.3e} s \
         for this grid"
    )]
    UnstableTimeStep { dt: f64, max_dt: f64 },
    #[error("the modal low-frequency model supports shoebox rooms only")]
    ModalNeedsShoebox,
    #[error("simulation produced an empty or degenerate impulse response")]
    EmptyRir,
    #[error("RIR invariant violated: {0}")]
    Invariant(&'static str),
    #[error("decay range never reached: EDC stays above {target_db} dB after the peak")]
    InsufficientDecay { target_db: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

//! Reverberation analysis: Schroeder decay curves, RT60 estimates, DRR.

use crate::acoustics::{AcousticsError, Rir};
use crate::num::Sample;

/// Default EDC fit window: −5 dB down to −35 dB (a T30-style estimate).
pub const DEFAULT_FIT_RANGE_DB: (f64, f64) = (-5.0, -35.0);

/// Half-width of the direct-sound window used for the DRR, seconds.
const DIRECT_WINDOW: f64 = 2.5e-3;

#[derive(Clone, Debug)]
pub struct RirAnalysis {
    /// RT60 extrapolated from the EDC slope over `fit_range_db`.
    pub rt60: f64,
    /// Direct-to-reverberant ratio in dB; `+∞` when nothing follows the
    /// direct sound.
    pub drr_db: f64,
    /// Schroeder energy decay curve in dB, normalised to 0 dB at sample 0.
    pub edc_db: Vec<f64>,
    pub fit_range_db: (f64, f64),
}

/// Schroeder backward integration with a least-squares fit of the decay.
///
/// `fit_range_db` is `(upper, lower)`, e.g. `(-5, -35)`: the fit runs from
/// the first sample at or below the upper level to the first at or below the
/// lower level, and RT60 extrapolates that slope to −60 dB. An RIR whose
/// decay never reaches the lower level (too short, or energy still arriving
/// at the end) is reported as an error rather than a guess.
pub fn analyze_rir<T: Sample>(
    rir: &Rir<T>,
    fit_range_db: (f64, f64),
) -> Result<RirAnalysis, AcousticsError> {
    let (upper, lower) = fit_range_db;
    if !(upper < 0.0 && lower < upper) {
        return Err(AcousticsError::InvalidParam {
            what: "fit_range_db",
            value: upper,
        });
    }
    if rir.is_empty() {
        return Err(AcousticsError::EmptyRir);
    }

    // Backward energy integration in f64.
    let mut edc = vec![0.0f64; rir.len()];
    let mut acc = 0.0;
    for (slot, &s) in edc.iter_mut().zip(&rir.samples).rev() {
        let s = s.as_f64();
        acc += s * s;
        *slot = acc;
    }
    let total = acc;
    if total <= 0.0 {
        return Err(AcousticsError::EmptyRir);
    }
    let edc_db: Vec<f64> = edc
        .iter()
        .map(|&e| {
            if e > 0.0 {
                10.0 * (e / total).log10()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();

    let start = edc_db
        .iter()
        .position(|&db| db <= upper)
        .ok_or(AcousticsError::InsufficientDecay { target_db: upper })?;
    let end = edc_db
        .iter()
        .position(|&db| db <= lower)
        .ok_or(AcousticsError::InsufficientDecay { target_db: lower })?;
    if end <= start + 1 {
        return Err(AcousticsError::InsufficientDecay { target_db: lower });
    }
    // The backward integral always dives just before the buffer runs out of
    // energy, so a lower crossing inside the final 5% is truncation (energy
    // still arriving at the end), not a real decay.
    if end + rir.len().div_ceil(20) >= rir.len() {
        return Err(AcousticsError::InsufficientDecay { target_db: lower });
    }

    // Least squares of EDC (dB) against time over [start, end].
    let fs = rir.sample_rate as f64;
    let n = (end - start + 1) as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for i in start..=end {
        let x = i as f64 / fs;
        let y = edc_db[i];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if !(slope.is_finite() && slope < 0.0) {
        return Err(AcousticsError::InsufficientDecay { target_db: lower });
    }

    Ok(RirAnalysis {
        rt60: -60.0 / slope,
        drr_db: direct_to_reverberant(rir),
        edc_db,
        fit_range_db,
    })
}

fn direct_to_reverberant<T: Sample>(rir: &Rir<T>) -> f64 {
    let half = (DIRECT_WINDOW * rir.sample_rate as f64).round() as usize;
    let lo = rir.direct_index.saturating_sub(half);
    let hi = (rir.direct_index + half + 1).min(rir.len());
    let sq = |s: &T| {
        let s = s.as_f64();
        s * s
    };
    let direct: f64 = rir.samples[lo..hi].iter().map(sq).sum();
    let rest: f64 = rir.samples[..lo].iter().map(sq).sum::<f64>()
        + rir.samples[hi..].iter().map(sq).sum::<f64>();
    if rest <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (direct / rest).log10()
    }
}

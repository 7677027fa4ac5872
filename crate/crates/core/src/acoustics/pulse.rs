//! Band-limited placement of impulses at fractional sample delays.

use crate::num::Sample;

/// Taps span `±PULSE_HALF_WIDTH` samples around the arrival.
pub const PULSE_HALF_WIDTH: i64 = 16;

/// Value of the fractional-delay kernel at `offset` samples from the arrival
/// time: a Hann-windowed sinc, zero outside `|offset| ≥ 16`.
///
/// An arrival of amplitude `A` at time `t0` (in samples) contributes
/// `A · pulse_kernel(n − t0)` to output sample `n`. An integer `t0`
/// degenerates to a single unit tap, so exact-delay arrivals stay exact.
pub fn pulse_kernel(offset: f64) -> f64 {
    let w = PULSE_HALF_WIDTH as f64;
    if offset.abs() >= w {
        return 0.0;
    }
    if offset == 0.0 {
        return 1.0;
    }
    let x = std::f64::consts::PI * offset;
    let sinc = x.sin() / x;
    let window = 0.5 * (1.0 + (x / w).cos());
    sinc * window
}

/// Adds an impulse of amplitude `amp` at fractional sample time `t0` into
/// `buf`. Taps outside the buffer are dropped (the arrival may straddle the
/// start or end of the response).
///
/// Arrivals within 1e-9 samples of the grid snap to a single tap: the kernel
/// there equals 1 to double precision, while evaluating `sin(π·frac)` with
/// `frac` that close to 0 or 1 would amplify rounding noise into the tap.
pub fn place_pulse<T: Sample>(buf: &mut [T], t0: f64, amp: f64) {
    debug_assert!(t0.is_finite() && amp.is_finite());
    let nearest = t0.round();
    if (t0 - nearest).abs() < 1e-9 {
        if let Ok(idx) = usize::try_from(nearest as i64) {
            if idx < buf.len() {
                buf[idx] += T::of(amp);
            }
        }
        return;
    }
    let n0 = t0.floor();
    let frac = t0 - n0;
    let n0 = n0 as i64;

    // sin(π(j − frac)) = (−1)^(j+1)·sin(π·frac): one sine for all taps. The
    // window cosine advances by a fixed rotation per tap.
    let sin_pi_frac = (std::f64::consts::PI * frac).sin();
    let w = PULSE_HALF_WIDTH as f64;
    let step = std::f64::consts::PI / w;
    let start = (-(PULSE_HALF_WIDTH - 1) as f64 - frac) * step;
    let (mut win_sin, mut win_cos) = start.sin_cos();
    let (rot_sin, rot_cos) = step.sin_cos();

    for j in -(PULSE_HALF_WIDTH - 1)..=PULSE_HALF_WIDTH {
        let u = j as f64 - frac;
        let sign = if j & 1 == 0 { -1.0 } else { 1.0 };
        let sinc = sign * sin_pi_frac / (std::f64::consts::PI * u);
        let window = 0.5 * (1.0 + win_cos);
        let idx = n0 + j;
        if idx >= 0 && (idx as usize) < buf.len() {
            buf[idx as usize] += T::of(amp * sinc * window);
        }
        let next_cos = win_cos * rot_cos - win_sin * rot_sin;
        win_sin = win_sin * rot_cos + win_cos * rot_sin;
        win_cos = next_cos;
    }
}

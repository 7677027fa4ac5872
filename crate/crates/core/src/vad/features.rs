use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::VadError;
use crate::corpus::LabelTrack;
use crate::dsp::Signal;
use crate::num::Sample;

/// Analysis framing. Frames start every `hop_ms` and a signal shorter than
/// one frame has no frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSpec {
    pub frame_ms: f64,
    pub hop_ms: f64,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            frame_ms: 25.0,
            hop_ms: 10.0,
        }
    }
}

impl FrameSpec {
    pub fn validate(&self) -> Result<(), VadError> {
        let ok = self.hop_ms.is_finite()
            && self.frame_ms.is_finite()
            && self.hop_ms > 0.0
            && self.hop_ms <= self.frame_ms;
        if ok {
            Ok(())
        } else {
            Err(VadError::BadFrameSpec {
                frame_ms: self.frame_ms,
                hop_ms: self.hop_ms,
            })
        }
    }

    pub fn frame_samples(&self, sample_rate: u32) -> usize {
        (self.frame_ms * sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        ((self.hop_ms * sample_rate as f64 / 1000.0).round() as usize).max(1)
    }

    /// `floor((len − frame)/hop) + 1`, or 0 when the signal is shorter than
    /// one frame.
    pub fn frame_count(&self, len: usize, sample_rate: u32) -> usize {
        let frame = self.frame_samples(sample_rate);
        if len < frame || frame == 0 {
            0
        } else {
            (len - frame) / self.hop_samples(sample_rate) + 1
        }
    }
}

/// Per-frame features before context stacking, in row order.
pub const FEAT_LOG_ENERGY: usize = 0;
pub const FEAT_ZCR: usize = 1;
pub const FEAT_FLATNESS: usize = 2;
pub const FEAT_CENTROID: usize = 3;
/// First of the six octave-band energy ratios.
pub const FEAT_BANDS: usize = 4;
pub const BASE_DIM: usize = 10;
/// Frames stacked on each side of the centre frame.
pub const CONTEXT_FRAMES: usize = 2;
pub const STACKED_DIM: usize = BASE_DIM * (2 * CONTEXT_FRAMES + 1);

/// Silent frames report exactly this log energy instead of −∞.
pub const ENERGY_FLOOR_DB: f64 = -100.0;

/// Octave band centres whose geometric-mean edges bound the band-energy
/// ratio features; the outer edges are 0 Hz and Nyquist.
const BAND_CENTERS_HZ: [f64; 6] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0];

const SPECTRUM_EPS: f64 = 1e-20;

/// Feature matrix for one signal: `n_frames` rows of `dim` values, plus the
/// centre time of each frame in seconds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Features {
    pub dim: usize,
    pub n_frames: usize,
    /// Row-major `n_frames × dim`.
    pub data: Vec<f64>,
    pub times: Vec<f64>,
}

impl Features {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Extracts per-frame features and stacks ±[`CONTEXT_FRAMES`] neighbours
/// (edges replicated), giving a [`STACKED_DIM`]-dimensional row per frame.
///
/// Base features per frame: log energy (dB, floored at
/// [`ENERGY_FLOOR_DB`]) and zero-crossing rate on the raw frame; spectral
/// flatness, spectral centroid (Hz) and six octave-band energy ratios on the
/// Hann-windowed spectrum.
pub fn extract_features<T: Sample>(
    signal: &Signal<T>,
    spec: &FrameSpec,
) -> Result<Features, VadError> {
    spec.validate()?;
    let frame = spec.frame_samples(signal.sample_rate);
    let hop = spec.hop_samples(signal.sample_rate);
    if signal.samples.len() < frame || frame < 2 {
        return Err(VadError::SignalTooShort {
            samples: signal.samples.len(),
            frame,
        });
    }
    let n_frames = (signal.samples.len() - frame) / hop + 1;

    let n_fft = frame.next_power_of_two();
    let fft = FftPlanner::new().plan_fft_forward(n_fft);
    let window: Vec<f64> = (0..frame)
        .map(|i| {
            0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / (frame - 1) as f64).cos()
        })
        .collect();
    let band_edges = band_edges(signal.sample_rate);

    let mut base = vec![0.0f64; n_frames * BASE_DIM];
    let mut times = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    for i in 0..n_frames {
        let start = i * hop;
        let row = &mut base[i * BASE_DIM..(i + 1) * BASE_DIM];
        let samples = &signal.samples[start..start + frame];

        let mut power = 0.0;
        let mut crossings = 0usize;
        let mut prev_nonneg = samples[0].as_f64() >= 0.0;
        for (j, &s) in samples.iter().enumerate() {
            let x = s.as_f64();
            power += x * x;
            let nonneg = x >= 0.0;
            if j > 0 && nonneg != prev_nonneg {
                crossings += 1;
            }
            prev_nonneg = nonneg;
            buf[j] = Complex::new(x * window[j], 0.0);
        }
        for slot in buf.iter_mut().skip(frame) {
            *slot = Complex::new(0.0, 0.0);
        }
        row[FEAT_LOG_ENERGY] = (10.0 * (power / frame as f64).log10()).max(ENERGY_FLOOR_DB);
        row[FEAT_ZCR] = crossings as f64 / (frame - 1) as f64;

        fft.process(&mut buf);
        spectral_features(&buf, n_fft, signal.sample_rate, &band_edges, row);
        times.push((start as f64 + frame as f64 / 2.0) / signal.sample_rate as f64);
    }

    Ok(Features {
        dim: STACKED_DIM,
        n_frames,
        data: stack_context(&base, n_frames),
        times,
    })
}

/// Geometric-mean edges between the band centres, closed by 0 and Nyquist.
fn band_edges(sample_rate: u32) -> [f64; BAND_CENTERS_HZ.len() + 1] {
    let mut edges = [0.0; BAND_CENTERS_HZ.len() + 1];
    for (i, pair) in BAND_CENTERS_HZ.windows(2).enumerate() {
        edges[i + 1] = (pair[0] * pair[1]).sqrt();
    }
    edges[BAND_CENTERS_HZ.len()] = sample_rate as f64 / 2.0;
    edges
}

/// Fills flatness, centroid and band ratios from the positive-frequency
/// power spectrum (DC excluded).
fn spectral_features(
    spectrum: &[Complex<f64>],
    n_fft: usize,
    sample_rate: u32,
    band_edges: &[f64],
    row: &mut [f64],
) {
    let half = n_fft / 2;
    let mut total = 0.0;
    let mut log_sum = 0.0;
    let mut weighted_freq = 0.0;
    let mut band_power = [0.0f64; BAND_CENTERS_HZ.len()];
    for k in 1..=half {
        let p = spectrum[k].norm_sqr();
        let f = k as f64 * sample_rate as f64 / n_fft as f64;
        total += p;
        log_sum += (p + SPECTRUM_EPS).ln();
        weighted_freq += f * p;
        // Upper band edges are exclusive except the top band, which runs to
        // the Nyquist bin inclusive; anything past the interior edges (low
        // sample rates) lands in the top band too.
        let band = band_edges
            .windows(2)
            .position(|e| f >= e[0] && f < e[1])
            .unwrap_or(BAND_CENTERS_HZ.len() - 1);
        band_power[band] += p;
    }
    let mean = total / half as f64;
    row[FEAT_FLATNESS] = (log_sum / half as f64).exp() / (mean + SPECTRUM_EPS);
    row[FEAT_CENTROID] = if total > 0.0 { weighted_freq / total } else { 0.0 };
    for (b, &p) in band_power.iter().enumerate() {
        row[FEAT_BANDS + b] = if total > 0.0 { p / total } else { 0.0 };
    }
}

fn stack_context(base: &[f64], n_frames: usize) -> Vec<f64> {
    let mut data = vec![0.0f64; n_frames * STACKED_DIM];
    for i in 0..n_frames {
        let row = &mut data[i * STACKED_DIM..(i + 1) * STACKED_DIM];
        for (slot, offset) in (-(CONTEXT_FRAMES as isize)..=CONTEXT_FRAMES as isize).enumerate() {
            let j = (i as isize + offset).clamp(0, n_frames as isize - 1) as usize;
            row[slot * BASE_DIM..(slot + 1) * BASE_DIM]
                .copy_from_slice(&base[j * BASE_DIM..(j + 1) * BASE_DIM]);
        }
    }
    data
}

/// Frame-level ground truth: a frame is speech iff at least half of its span
/// overlaps a labelled segment.
pub fn frame_labels(
    labels: &LabelTrack,
    spec: &FrameSpec,
    sample_rate: u32,
    n_frames: usize,
) -> Vec<bool> {
    let frame = spec.frame_samples(sample_rate) as f64 / sample_rate as f64;
    let hop = spec.hop_samples(sample_rate) as f64 / sample_rate as f64;
    (0..n_frames)
        .map(|i| {
            let start = i as f64 * hop;
            labels.overlap(start, start + frame) >= 0.5 * frame
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, seconds: f64, rate: u32) -> Signal<f64> {
        let n = (seconds * rate as f64) as usize;
        let samples = (0..n)
            .map(|i| 0.5 * (std::f64::consts::TAU * freq * i as f64 / rate as f64).sin())
            .collect();
        Signal::new(samples, rate).unwrap()
    }

    /// Offset of a base feature inside the stacked row's centre block.
    fn centre(feat: usize) -> usize {
        CONTEXT_FRAMES * BASE_DIM + feat
    }

    #[test]
    fn one_second_at_16k_gives_98_frames() {
        let f = extract_features(&tone(440.0, 1.0, 16_000), &FrameSpec::default()).unwrap();
        assert_eq!(f.n_frames, 98);
        assert_eq!(f.dim, STACKED_DIM);
        assert_eq!(f.data.len(), 98 * STACKED_DIM);
        assert_eq!(f.times.len(), 98);
        // Centre of the first 25 ms frame.
        assert!((f.times[0] - 0.0125).abs() < 1e-12);
        assert!((f.times[1] - f.times[0] - 0.010).abs() < 1e-12);
        assert!(f.data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn frame_count_formula_is_exact() {
        let spec = FrameSpec::default();
        assert_eq!(spec.frame_count(16_000, 16_000), 98);
        assert_eq!(spec.frame_count(400, 16_000), 1);
        assert_eq!(spec.frame_count(399, 16_000), 0);
        assert_eq!(spec.frame_count(560, 16_000), 2);
    }

    #[test]
    fn tone_centroid_lands_on_the_tone() {
        let f = extract_features(&tone(1000.0, 0.5, 16_000), &FrameSpec::default()).unwrap();
        for i in 0..f.n_frames {
            let c = f.row(i)[centre(FEAT_CENTROID)];
            assert!((c - 1000.0).abs() <= 25.0, "centroid {c} Hz");
        }
    }

    #[test]
    fn tone_energy_concentrates_in_its_octave_band() {
        // 1 kHz sits in the band bounded by √(500·1000) ≈ 707 Hz and
        // √(1000·2000) ≈ 1414 Hz — the fourth of the six ratios.
        let f = extract_features(&tone(1000.0, 0.5, 16_000), &FrameSpec::default()).unwrap();
        let row = f.row(f.n_frames / 2);
        assert!(row[centre(FEAT_BANDS + 3)] > 0.9);
        let sum: f64 = (0..6).map(|b| row[centre(FEAT_BANDS + b)]).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn silence_hits_the_energy_floor_exactly() {
        let sig = Signal {
            samples: vec![0.0f64; 16_000],
            sample_rate: 16_000,
        };
        let f = extract_features(&sig, &FrameSpec::default()).unwrap();
        for i in 0..f.n_frames {
            let row = f.row(i);
            assert_eq!(row[centre(FEAT_LOG_ENERGY)], ENERGY_FLOOR_DB);
            assert!((row[centre(FEAT_FLATNESS)] - 1.0).abs() < 1e-9);
            assert_eq!(row[centre(FEAT_CENTROID)], 0.0);
            assert!(row.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn zero_crossing_rate_spans_its_range() {
        let alternating: Vec<f64> = (0..800).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let sig = Signal::new(alternating, 16_000).unwrap();
        let f = extract_features(&sig, &FrameSpec::default()).unwrap();
        assert_eq!(f.row(0)[centre(FEAT_ZCR)], 1.0);

        let dc = Signal::new(vec![0.3f64; 800], 16_000).unwrap();
        let f = extract_features(&dc, &FrameSpec::default()).unwrap();
        assert_eq!(f.row(0)[centre(FEAT_ZCR)], 0.0);
    }

    #[test]
    fn context_stacking_replicates_edges() {
        let f = extract_features(&tone(300.0, 0.25, 16_000), &FrameSpec::default()).unwrap();
        let first = f.row(0);
        // At the left edge both context-left blocks replicate the centre.
        assert_eq!(first[..BASE_DIM], first[centre(0)..centre(0) + BASE_DIM]);
        let last = f.row(f.n_frames - 1);
        assert_eq!(
            last[(2 * CONTEXT_FRAMES) * BASE_DIM..],
            last[centre(0)..centre(0) + BASE_DIM]
        );
        // Interior rows see their actual neighbours.
        let mid = f.row(5);
        assert_eq!(mid[..BASE_DIM], f.row(3)[centre(0)..centre(0) + BASE_DIM]);
    }

    #[test]
    fn short_signals_and_bad_specs_are_rejected() {
        let sig = Signal::new(vec![0.1f64; 399], 16_000).unwrap();
        assert!(matches!(
            extract_features(&sig, &FrameSpec::default()),
            Err(VadError::SignalTooShort { .. })
        ));
        let bad = FrameSpec {
            frame_ms: 10.0,
            hop_ms: 25.0,
        };
        assert!(matches!(
            bad.validate(),
            Err(VadError::BadFrameSpec { .. })
        ));
    }

    #[test]
    fn frame_labels_follow_the_half_overlap_rule() {
        let spec = FrameSpec {
            frame_ms: 25.0,
            hop_ms: 25.0,
        };
        let empty = frame_labels(&LabelTrack::empty(), &spec, 16_000, 10);
        assert!(empty.iter().all(|&f| !f));

        let full = LabelTrack::new(vec![(0.0, 0.25)]).unwrap();
        assert!(frame_labels(&full, &spec, 16_000, 10).iter().all(|&f| f));

        // A segment covering exactly the third hop-aligned frame.
        let one = LabelTrack::new(vec![(0.050, 0.075)]).unwrap();
        let flags = frame_labels(&one, &spec, 16_000, 10);
        let expected: Vec<bool> = (0..10).map(|i| i == 2).collect();
        assert_eq!(flags, expected);

        // Exactly half a frame of overlap counts as speech; just under does
        // not.
        let half = LabelTrack::new(vec![(0.0125, 0.025)]).unwrap();
        assert!(frame_labels(&half, &spec, 16_000, 1)[0]);
        let under = LabelTrack::new(vec![(0.0130, 0.025)]).unwrap();
        assert!(!frame_labels(&under, &spec, 16_000, 1)[0]);
    }

    #[test]
    fn overlapping_frames_use_their_own_spans() {
        // 25/10 ms framing: frame 4 spans [40, 65) ms. A segment across
        // [45, 60) ms covers 15/25 of it — speech — but only 5/25 of frame 6
        // at [60, 85) ms.
        let spec = FrameSpec::default();
        let t = LabelTrack::new(vec![(0.045, 0.060)]).unwrap();
        let flags = frame_labels(&t, &spec, 16_000, 8);
        assert!(flags[4]);
        assert!(!flags[6]);
    }
}

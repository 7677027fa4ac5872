//! Batch augmentation. Output layout under the target directory:
//!
//! ```text
//! anechoic/<utterance_id>.wav|.txt   quantised sources and their labels
//! rirs/<scenario_id>.wav|.json       impulse responses and sidecar metadata
//! audio/<utterance_id>__<scenario_id>.wav|.txt   augmented entries
//! manifest.jsonl                     one entry per line, sorted
//! ```
//!
//! Every entry derives its own random stream from the master seed and its
//! `(utterance, scenario)` indices, so regeneration is bit-identical no
//! matter how the batch is scheduled. Augmentation reads each utterance
//! exactly as persisted (16-bit quantised), so re-running from the manifest
//! and the `anechoic/` files reproduces the same bytes.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{read_wav, write_rir_wav, write_wav, CorpusError, LabelTrack, Utterance};
use crate::acoustics::{analyze_rir, simulate_rir, Rir, RirModel, SimParams, DEFAULT_FIT_RANGE_DB};
use crate::dsp::{convolve, generate_noise, FrameMask, MixSpec, NoiseKind, Signal};
use crate::geometry::{Scenario, ScenarioRecord};
use crate::num::Sample;
use crate::seed::derive_seed;
use crate::vad::{frame_labels, FrameSpec};

/// One line of the augmentation manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub utterance_id: String,
    /// Anechoic source audio backing this entry.
    pub source: PathBuf,
    /// Scenario whose impulse response was applied, or `"anechoic"`.
    pub scenario_id: String,
    /// Simulation model kind; absent for anechoic and measured entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseKind>,
    /// Root seed of this entry's random streams.
    pub seed: u64,
    pub output: PathBuf,
}

/// A failed entry, reported without aborting the batch. Scenario-level
/// failures (a test RIR at the wrong rate) use `"*"` as the utterance id.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntryOutcome {
    pub utterance_id: String,
    pub scenario_id: String,
    pub error: String,
}

/// Result of a batch build; `entries` is sorted by
/// `(utterance_id, scenario_id)` and already saved to `manifest.jsonl`.
#[derive(Clone, Debug)]
pub struct Manifest {
    pub manifest_id: String,
    pub entries: Vec<ManifestEntry>,
    pub failures: Vec<EntryOutcome>,
}

/// Writes entries as JSONL. Paths under the manifest's directory are stored
/// relative to it, so two builds of the same batch into different
/// directories produce byte-identical manifests.
pub fn save_manifest(manifest: &Manifest, path: &Path) -> Result<(), CorpusError> {
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let relativise = |p: &Path| p.strip_prefix(base).unwrap_or(p).to_path_buf();
    let mut out = Vec::new();
    for entry in &manifest.entries {
        let mut entry = entry.clone();
        entry.source = relativise(&entry.source);
        entry.output = relativise(&entry.output);
        serde_json::to_writer(&mut out, &entry)?;
        out.push(b'\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a manifest written by [`save_manifest`]; the id is the file stem
/// and relative paths are resolved against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Manifest, CorpusError> {
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut entry: ManifestEntry = serde_json::from_str(&line)?;
        entry.source = base.join(&entry.source);
        entry.output = base.join(&entry.output);
        entries.push(entry);
    }
    Ok(Manifest {
        manifest_id: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        entries,
        failures: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSetConfig {
    /// Per-entry SNR is drawn uniformly from this range (dB).
    pub snr_range_db: (f64, f64),
    pub noise: NoiseKind,
    /// Also emit a noisy, non-reverberant version of each utterance.
    pub include_anechoic: bool,
    pub master_seed: u64,
    /// Frame length of the non-overlapping speech mask that anchors the SNR
    /// power reference.
    pub mask_frame_ms: f64,
    /// Extend each speech label by the scenario's RT60 target so the
    /// reverberant tail counts as speech. Off by default: tails keep the
    /// non-speech label of the anechoic timing.
    pub label_tails: bool,
    pub sim: SimParams,
}

impl Default for TrainingSetConfig {
    fn default() -> Self {
        TrainingSetConfig {
            snr_range_db: (10.0, 20.0),
            noise: NoiseKind::White,
            include_anechoic: true,
            master_seed: 0,
            mask_frame_ms: 25.0,
            label_tails: false,
            sim: SimParams::default(),
        }
    }
}

/// Sidecar written next to each simulated impulse response.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RirSidecar {
    pub scenario_id: String,
    pub kind: String,
    pub parameters: RirParameters,
    /// RT60 estimated from the simulated response itself; absent when the
    /// decay cannot be fitted (e.g. the response is too short).
    pub rt60_est: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RirParameters {
    pub model: RirModel,
    pub sim: SimParams,
    pub scenario: ScenarioRecord,
}

/// Simulates each scenario's impulse response, mixes noise into every
/// utterance at a per-entry SNR, convolves, and persists audio, labels,
/// impulse responses and the manifest under `out_dir`.
///
/// The manifest has `|corpus| × (|scenarios| + include_anechoic)` entries.
/// Entry-level failures are collected in [`Manifest::failures`]; scenario
/// simulation errors abort the build.
pub fn build_training_set<T: Sample>(
    corpus: &[Utterance<T>],
    scenarios: &[Scenario<T>],
    model: &RirModel,
    config: &TrainingSetConfig,
    out_dir: &Path,
) -> Result<Manifest, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus("corpus"));
    }
    if scenarios.is_empty() && !config.include_anechoic {
        return Err(CorpusError::EmptyCorpus("scenarios"));
    }
    let (lo, hi) = config.snr_range_db;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(CorpusError::InvalidParam(format!(
            "snr_range_db must be an ordered finite range, got [{lo}, {hi}]"
        )));
    }
    if !(config.mask_frame_ms.is_finite() && config.mask_frame_ms > 0.0) {
        return Err(CorpusError::InvalidParam(format!(
            "mask_frame_ms must be positive, got {}",
            config.mask_frame_ms
        )));
    }
    check_corpus(corpus, config.sim.sample_rate)?;

    let sources = persist_sources(corpus, out_dir)?;

    // One impulse response per scenario, simulated up front; failures here
    // are configuration errors and abort the batch.
    let rir_dir = out_dir.join("rirs");
    std::fs::create_dir_all(&rir_dir)?;
    let rirs: Vec<Rir<T>> = scenarios
        .par_iter()
        .map(|sc| simulate_rir(sc, model, &config.sim))
        .collect::<Result<_, _>>()?;
    for (scenario, rir) in scenarios.iter().zip(&rirs) {
        write_rir_wav(
            &rir_dir.join(format!("{}.wav", scenario.id)),
            &rir.samples,
            rir.sample_rate,
        )?;
        let sidecar = RirSidecar {
            scenario_id: scenario.id.clone(),
            kind: model.name().to_string(),
            parameters: RirParameters {
                model: model.clone(),
                sim: config.sim.clone(),
                scenario: ScenarioRecord::from_scenario(scenario),
            },
            rt60_est: analyze_rir(rir, DEFAULT_FIT_RANGE_DB).ok().map(|a| a.rt60),
        };
        std::fs::write(
            rir_dir.join(format!("{}.json", scenario.id)),
            serde_json::to_vec_pretty(&sidecar)?,
        )?;
    }

    let audio_dir = out_dir.join("audio");
    std::fs::create_dir_all(&audio_dir)?;

    // Job list: scenario index, or `scenarios.len()` for the anechoic entry
    // (its seed tag must not collide with any scenario index).
    let anechoic_tag = scenarios.len();
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for u in 0..corpus.len() {
        if config.include_anechoic {
            jobs.push((u, anechoic_tag));
        }
        for s in 0..scenarios.len() {
            jobs.push((u, s));
        }
    }

    let results: Vec<Result<ManifestEntry, EntryOutcome>> = jobs
        .par_iter()
        .map(|&(u, s)| {
            let scenario = scenarios.get(s);
            let scenario_id = scenario.map_or("anechoic", |sc| sc.id.as_str());
            augment_entry(
                &sources[u],
                scenario,
                scenario.map(|_| &rirs[s]),
                model,
                config,
                derive_seed(config.master_seed, &[u as u64, s as u64]),
                &audio_dir,
            )
            .map_err(|e| EntryOutcome {
                utterance_id: sources[u].utterance.utterance_id.clone(),
                scenario_id: scenario_id.to_string(),
                error: e.to_string(),
            })
        })
        .collect();

    finish(
        results,
        format!(
            "train-{}x{}-{:016x}",
            corpus.len(),
            scenarios.len() + config.include_anechoic as usize,
            config.master_seed
        ),
        out_dir,
    )
}

/// Convolves every utterance with every impulse response, without noise.
/// Responses whose sample rate differs from their utterance are reported as
/// failures (`"*"` utterance) and skipped.
pub fn build_test_set<T: Sample>(
    corpus: &[Utterance<T>],
    rirs: &[(String, Signal<T>)],
    out_dir: &Path,
) -> Result<Manifest, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus("corpus"));
    }
    if rirs.is_empty() {
        return Err(CorpusError::EmptyCorpus("impulse responses"));
    }
    check_corpus(corpus, corpus[0].signal.sample_rate)?;

    let sources = persist_sources(corpus, out_dir)?;
    let audio_dir = out_dir.join("audio");
    std::fs::create_dir_all(&audio_dir)?;

    let rate = corpus[0].signal.sample_rate;
    let mut rate_failures = Vec::new();
    let usable: Vec<(usize, &(String, Signal<T>))> = rirs
        .iter()
        .enumerate()
        .filter(|(_, (id, signal))| {
            if signal.sample_rate == rate {
                true
            } else {
                rate_failures.push(EntryOutcome {
                    utterance_id: "*".into(),
                    scenario_id: id.clone(),
                    error: CorpusError::SampleRateMismatch {
                        left: rate,
                        right: signal.sample_rate,
                    }
                    .to_string(),
                });
                false
            }
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..corpus.len())
        .flat_map(|u| (0..usable.len()).map(move |r| (u, r)))
        .collect();
    let results: Vec<Result<ManifestEntry, EntryOutcome>> = jobs
        .par_iter()
        .map(|&(u, r)| {
            let (rir_id, rir_signal) = usable[r].1;
            reverb_entry(&sources[u], rir_id, rir_signal, &audio_dir).map_err(|e| EntryOutcome {
                utterance_id: sources[u].utterance.utterance_id.clone(),
                scenario_id: rir_id.clone(),
                error: e.to_string(),
            })
        })
        .collect();

    let mut manifest = finish(
        results,
        format!("test-{}x{}", corpus.len(), rirs.len()),
        out_dir,
    )?;
    manifest.failures.extend(rate_failures);
    Ok(manifest)
}

/// A persisted source: the utterance as it exists on disk (16-bit
/// quantised), which is what augmentation consumes.
struct PersistedSource<T> {
    utterance: Utterance<T>,
    path: PathBuf,
}

fn check_corpus<T: Sample>(corpus: &[Utterance<T>], rate: u32) -> Result<(), CorpusError> {
    let mut seen = std::collections::HashSet::new();
    for utt in corpus {
        if !seen.insert(utt.utterance_id.as_str()) {
            return Err(CorpusError::InvalidParam(format!(
                "duplicate utterance id {:?}",
                utt.utterance_id
            )));
        }
        if utt.utterance_id.contains("__") || utt.utterance_id.contains(['/', '\\']) {
            return Err(CorpusError::InvalidParam(format!(
                "utterance id {:?} would break the output file naming",
                utt.utterance_id
            )));
        }
        if utt.signal.sample_rate != rate {
            return Err(CorpusError::SampleRateMismatch {
                left: rate,
                right: utt.signal.sample_rate,
            });
        }
    }
    Ok(())
}

fn persist_sources<T: Sample>(
    corpus: &[Utterance<T>],
    out_dir: &Path,
) -> Result<Vec<PersistedSource<T>>, CorpusError> {
    let dir = out_dir.join("anechoic");
    std::fs::create_dir_all(&dir)?;
    corpus
        .iter()
        .map(|utt| {
            let path = dir.join(format!("{}.wav", utt.utterance_id));
            write_wav(&path, &utt.signal)?;
            utt.labels.save(&dir.join(format!("{}.txt", utt.utterance_id)))?;
            let quantised = Signal {
                samples: utt
                    .signal
                    .samples
                    .iter()
                    .map(|&s| {
                        T::of((s.as_f64() * 32767.0).round().clamp(-32768.0, 32767.0) / 32768.0)
                    })
                    .collect(),
                sample_rate: utt.signal.sample_rate,
            };
            Ok(PersistedSource {
                utterance: Utterance {
                    utterance_id: utt.utterance_id.clone(),
                    signal: quantised,
                    labels: utt.labels.clone(),
                },
                path,
            })
        })
        .collect()
}

/// Builds one training entry: draw the SNR, mix noise over the whole
/// utterance with speech-frame power as the reference, then convolve with
/// the scenario's response (if any) and shift the labels by its direct
/// delay.
#[allow(clippy::too_many_arguments)]
fn augment_entry<T: Sample>(
    source: &PersistedSource<T>,
    scenario: Option<&Scenario<T>>,
    rir: Option<&Rir<T>>,
    model: &RirModel,
    config: &TrainingSetConfig,
    entry_seed: u64,
    audio_dir: &Path,
) -> Result<ManifestEntry, CorpusError> {
    use rand::{Rng, SeedableRng};
    let utt = &source.utterance;
    let rate = utt.signal.sample_rate;
    let (lo, hi) = config.snr_range_db;
    let mut snr_rng =
        rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(entry_seed, &[0]));
    let snr_db = snr_rng.gen_range(lo..=hi);
    let noise_seed = derive_seed(entry_seed, &[1]);

    let mask_spec = FrameSpec {
        frame_ms: config.mask_frame_ms,
        hop_ms: config.mask_frame_ms,
    };
    let frame = mask_spec.frame_samples(rate);
    let n_frames = mask_spec.frame_count(utt.signal.samples.len(), rate);
    if n_frames == 0 {
        return Err(CorpusError::InvalidParam(format!(
            "utterance {:?} is shorter than one {} ms mask frame",
            utt.utterance_id, config.mask_frame_ms
        )));
    }
    let flags = frame_labels(&utt.labels, &mask_spec, rate, n_frames);
    let mask = FrameMask::new(flags, frame, frame)?;

    let spec = MixSpec {
        snr_db,
        noise: config.noise.clone(),
        seed: noise_seed,
    };
    let noise = resolve_noise(&spec.noise, utt.signal.samples.len(), rate, noise_seed)?;
    let mixed = crate::dsp::mix_at_snr(&utt.signal, &noise, &spec, &mask)?;

    let (signal, labels, scenario_id, kind) = match (scenario, rir) {
        (Some(sc), Some(rir)) => {
            let rir_signal = Signal {
                samples: rir.samples.clone(),
                sample_rate: rir.sample_rate,
            };
            let out = convolve(&mixed, &rir_signal)?;
            let delay = rir.direct_index as f64 / rate as f64;
            let mut labels = utt.labels.shifted(delay)?;
            if config.label_tails {
                labels = extend_labels(&labels, sc.rt60_target.as_f64(), out.duration())?;
            }
            (out, labels, sc.id.clone(), Some(model.name().to_string()))
        }
        _ => (mixed, utt.labels.clone(), "anechoic".to_string(), None),
    };

    let output = audio_dir.join(format!("{}__{}.wav", utt.utterance_id, scenario_id));
    write_wav(&output, &signal)?;
    labels.save(&audio_dir.join(format!("{}__{}.txt", utt.utterance_id, scenario_id)))?;

    Ok(ManifestEntry {
        utterance_id: utt.utterance_id.clone(),
        source: source.path.clone(),
        scenario_id,
        kind,
        snr_db: Some(snr_db),
        noise: Some(spec.noise),
        seed: entry_seed,
        output,
    })
}

/// Builds one clean test entry: convolution only, labels shifted by the
/// response's peak (the direct path of a measured response).
fn reverb_entry<T: Sample>(
    source: &PersistedSource<T>,
    rir_id: &str,
    rir_signal: &Signal<T>,
    audio_dir: &Path,
) -> Result<ManifestEntry, CorpusError> {
    let utt = &source.utterance;
    let out = convolve(&utt.signal, rir_signal)?;
    let peak = rir_signal
        .samples
        .iter()
        .enumerate()
        .max_by(|a, b| {
            a.1.abs()
                .partial_cmp(&b.1.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map_or(0, |(i, _)| i);
    let labels = utt.labels.shifted(peak as f64 / utt.signal.sample_rate as f64)?;

    let output = audio_dir.join(format!("{}__{}.wav", utt.utterance_id, rir_id));
    write_wav(&output, &out)?;
    labels.save(&audio_dir.join(format!("{}__{}.txt", utt.utterance_id, rir_id)))?;

    Ok(ManifestEntry {
        utterance_id: utt.utterance_id.clone(),
        source: source.path.clone(),
        scenario_id: rir_id.to_string(),
        kind: None,
        snr_db: None,
        noise: None,
        seed: 0,
        output,
    })
}

/// File noise is read here (and tiled by the mixer); synthetic kinds are
/// generated at the utterance's length.
fn resolve_noise<T: Sample>(
    kind: &NoiseKind,
    len: usize,
    rate: u32,
    seed: u64,
) -> Result<Signal<T>, CorpusError> {
    match kind {
        NoiseKind::File { path } => {
            let noise = read_wav(path)?;
            if noise.sample_rate != rate {
                return Err(CorpusError::SampleRateMismatch {
                    left: rate,
                    right: noise.sample_rate,
                });
            }
            Ok(noise)
        }
        synthetic => Ok(generate_noise(synthetic, len, rate, seed)?),
    }
}

/// Pushes each segment's end out by `margin`, merging any overlaps this
/// creates and clamping to the signal end.
fn extend_labels(
    labels: &LabelTrack,
    margin: f64,
    duration: f64,
) -> Result<LabelTrack, CorpusError> {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for &(start, end) in labels.segments() {
        let end = (end + margin).min(duration);
        match merged.last_mut() {
            Some(prev) if start <= prev.1 => prev.1 = prev.1.max(end),
            _ => merged.push((start, end)),
        }
    }
    LabelTrack::new(merged)
}

fn finish(
    results: Vec<Result<ManifestEntry, EntryOutcome>>,
    manifest_id: String,
    out_dir: &Path,
) -> Result<Manifest, CorpusError> {
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => entries.push(e),
            Err(f) => failures.push(f),
        }
    }
    entries.sort_by(|a, b| {
        (a.utterance_id.as_str(), a.scenario_id.as_str())
            .cmp(&(b.utterance_id.as_str(), b.scenario_id.as_str()))
    });
    let manifest = Manifest {
        manifest_id,
        entries,
        failures,
    };
    save_manifest(&manifest, &out_dir.join("manifest.jsonl"))?;
    Ok(manifest)
}

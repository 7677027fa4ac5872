//! Shared plumbing: error-to-exit-code mapping, output-directory resolution,
//! thread-pool setup, corpus/RIR directory ingestion, and the feature/label
//! assembly used by both `train` and `evaluate`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use revad_core::corpus::{read_wav, LabelTrack, Manifest, Utterance};
use revad_core::dsp::Signal;
use revad_core::eval::{MetricReport, RocCurve};
use revad_core::vad::{extract_features, frame_labels, Features, FrameSpec};

/// Argument and configuration problems exit with 2, everything that goes
/// wrong while running exits with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(err) => write!(f, "{err:#}"),
        }
    }
}

impl<E: std::error::Error + Send + Sync + 'static> From<E> for CliError {
    fn from(err: E) -> Self {
        CliError::Runtime(anyhow::Error::new(err))
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;

/// `--out`, falling back to `$REVAD_OUT_ROOT/<subcommand>`.
pub fn resolve_out(out: Option<PathBuf>, subcommand: &str) -> CliResult<PathBuf> {
    match out {
        Some(path) => Ok(path),
        None => match std::env::var_os("REVAD_OUT_ROOT") {
            Some(root) => Ok(PathBuf::from(root).join(subcommand)),
            None => Err(usage("no output directory: pass --out or set REVAD_OUT_ROOT")),
        },
    }
}

/// Builds the worker pool for `--jobs` (0 = one thread per core). All
/// parallel work is seeded per item, so the pool size never changes output.
pub fn build_pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Loads a run config, refusing to mix it with parameter flags; `flags_used`
/// names the first explicit flag, if any.
pub fn load_config<C: DeserializeOwned>(
    path: &Path,
    flags_used: Option<&'static str>,
) -> CliResult<C> {
    if let Some(flag) = flags_used {
        return Err(usage(format!("--config cannot be combined with --{flag}")));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

/// Echoes the fully resolved config into the run directory so the run can be
/// reproduced with `--config <out>/config.json`.
pub fn echo_config<C: Serialize>(out_dir: &Path, config: &C) -> CliResult<()> {
    write_json(&out_dir.join("config.json"), config)
}

pub fn write_json<C: Serialize>(path: &Path, value: &C) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<C: DeserializeOwned>(path: &Path) -> CliResult<C> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Scored condition as persisted by `evaluate` and joined by `report`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalArtifact {
    pub report: MetricReport,
    pub roc: RocCurve,
}

/// WAV files in `dir`, sorted by file name for a deterministic order.
fn wav_paths(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| p.extension().is_some_and(|e| e == "wav"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "no .wav files in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

/// Reads `<stem>.wav` + `<stem>.txt` label pairs from a directory.
pub fn load_corpus_dir(dir: &Path) -> CliResult<Vec<Utterance<f64>>> {
    wav_paths(dir)?
        .iter()
        .map(|path| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let signal = read_wav::<f64>(path)?;
            let labels = LabelTrack::load(&path.with_extension("txt")).map_err(|e| {
                CliError::Runtime(anyhow::anyhow!(
                    "labels for {}: {e} (expected a start/end-seconds text file)",
                    path.display()
                ))
            })?;
            Ok(Utterance::new(stem, signal, labels)?)
        })
        .collect()
}

/// Reads every impulse response in a directory; ids are the file stems.
pub fn load_rir_dir(dir: &Path) -> CliResult<Vec<(String, Signal<f64>)>> {
    wav_paths(dir)?
        .iter()
        .map(|path| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((stem, read_wav::<f64>(path)?))
        })
        .collect()
}

/// Extracts stacked features and frame truth for every manifest entry
/// (labels live next to each output as `.txt`), concatenated in manifest
/// order regardless of worker count.
pub fn manifest_features(
    manifest: &Manifest,
    spec: &FrameSpec,
) -> CliResult<(Features, Vec<bool>)> {
    if manifest.entries.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "manifest {} has no entries",
            manifest.manifest_id
        )));
    }
    let per_entry: Vec<CliResult<(Features, Vec<bool>)>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let signal = read_wav::<f64>(&entry.output)?;
            let labels = LabelTrack::load(&entry.output.with_extension("txt"))?;
            let features = extract_features(&signal, spec)?;
            let truth = frame_labels(&labels, spec, signal.sample_rate, features.n_frames);
            Ok((features, truth))
        })
        .collect();

    let mut features = Features {
        dim: 0,
        n_frames: 0,
        data: Vec::new(),
        times: Vec::new(),
    };
    let mut truth = Vec::new();
    for result in per_entry {
        let (f, t) = result?;
        features.dim = f.dim;
        features.n_frames += f.n_frames;
        features.data.extend_from_slice(&f.data);
        features.times.extend_from_slice(&f.times);
        truth.extend_from_slice(&t);
    }
    Ok((features, truth))
}

//! Run configurations: one serde struct per subcommand, every field
//! defaulted, echoed verbatim into each run's output directory. A run is
//! therefore reproducible from `--config <out>/config.json` alone; `--out`
//! and `--jobs` stay outside the config because they must not change what is
//! computed.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use revad_core::acoustics::{
    BandedParams, DiffusionParams, HybridParams, ImageParams, ModalParams, RirModel, SimParams,
};
use revad_core::corpus::{PadPosition, SynthConfig, TrainingSetConfig};
use revad_core::dsp::NoiseKind;
use revad_core::geometry::SamplerConfig;
use revad_core::vad::{FrameSpec, TrainConfig};

/// `simulate`: sample scenarios and write their impulse responses.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub sampler: SamplerConfig,
    pub model: RirModel,
    pub sim: SimParams,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            sampler: SamplerConfig::default(),
            model: default_model(),
            sim: SimParams::default(),
        }
    }
}

pub fn default_model() -> RirModel {
    RirModel::Image(ImageParams::default())
}

/// Where `augment` gets its anechoic utterances.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusSource {
    /// Generated harmonic-stack utterances with exact labels.
    Synth {
        count: usize,
        seed: u64,
        #[serde(default)]
        synth: SynthConfig,
    },
    /// `<stem>.wav` + `<stem>.txt` pairs in a directory.
    Dir { path: PathBuf },
}

/// Where `augment --mode train` gets its scenarios.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSource {
    /// A scenario manifest written by `simulate`.
    File { path: PathBuf },
    /// Sampled inline.
    Sample {
        #[serde(default)]
        sampler: SamplerConfig,
    },
    /// No reverberation: anechoic(+noise) entries only.
    None,
}

/// Optional silence padding applied to every utterance before augmentation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PadSpec {
    pub seconds: f64,
    #[serde(default)]
    pub position: PadPosition,
}

/// `augment`: build a training or test set from a corpus.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum AugmentConfig {
    Train {
        corpus: CorpusSource,
        #[serde(default = "scenario_none")]
        scenarios: ScenarioSource,
        #[serde(default = "default_model")]
        model: RirModel,
        #[serde(default)]
        set: TrainingSetConfig,
        #[serde(default)]
        pad: Option<PadSpec>,
    },
    Test {
        corpus: CorpusSource,
        /// Directory of held-out impulse responses (`simulate` output or
        /// measured responses at the corpus sample rate).
        rir_dir: PathBuf,
        #[serde(default)]
        pad: Option<PadSpec>,
    },
}

fn scenario_none() -> ScenarioSource {
    ScenarioSource::None
}

/// `train`: fit the frame classifier on an augmented manifest.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCliConfig {
    pub manifest: PathBuf,
    #[serde(default)]
    pub frame: FrameSpec,
    #[serde(default)]
    pub hyper: TrainConfig,
}

/// `evaluate`: score a manifest with a trained model.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub model: PathBuf,
    pub manifest: PathBuf,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub frame: FrameSpec,
    /// Row label in reports; defaults to the manifest file stem.
    #[serde(default)]
    pub dataset_id: Option<String>,
}

pub fn default_threshold() -> f64 {
    0.5
}

/// One (anechoic-trained, augmented-trained) pair evaluated on the same
/// environment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub environment: String,
    /// `evaluate` output directory (or its eval.json) for condition A.
    pub anechoic: PathBuf,
    /// Same for condition B.
    pub augmented: PathBuf,
}

/// `report`: join evaluations into the condition × environment grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub pairs: Vec<PairSpec>,
}

/// "LO,HI" → a numeric range.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}: {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}: {hi:?}"))?;
    Ok((lo, hi))
}

/// Model kind name → that model with default parameters. Full parameter
/// control is the config file's job.
pub fn parse_model(s: &str) -> Result<RirModel, String> {
    match s {
        "image" => Ok(RirModel::Image(ImageParams::default())),
        "hybrid" => Ok(RirModel::Hybrid(HybridParams::default())),
        "banded_reflection" | "banded" => Ok(RirModel::BandedReflection(BandedParams::default())),
        "modal_low_freq" | "modal" => Ok(RirModel::ModalLowFreq(ModalParams::default())),
        "diffusion" => Ok(RirModel::Diffusion(DiffusionParams::default())),
        other => Err(format!(
            "unknown model {other:?}; expected image, hybrid, banded_reflection, \
             modal_low_freq or diffusion"
        )),
    }
}

/// "white" | "colored:SLOPE_DB_PER_OCTAVE" | "file:PATH" → a noise source.
pub fn parse_noise(s: &str) -> Result<NoiseKind, String> {
    if s == "white" {
        return Ok(NoiseKind::White);
    }
    if let Some(slope) = s.strip_prefix("colored:") {
        let slope_db_per_octave: f64 = slope.parse().map_err(|e| format!("{e}: {slope:?}"))?;
        return Ok(NoiseKind::Colored { slope_db_per_octave });
    }
    if let Some(path) = s.strip_prefix("file:") {
        return Ok(NoiseKind::File { path: path.into() });
    }
    Err(format!(
        "unknown noise {s:?}; expected white, colored:SLOPE or file:PATH"
    ))
}

pub fn parse_pad_position(s: &str) -> Result<PadPosition, String> {
    match s {
        "prepend" => Ok(PadPosition::Prepend),
        "append" => Ok(PadPosition::Append),
        "split" => Ok(PadPosition::Split),
        other => Err(format!(
            "unknown pad position {other:?}; expected prepend, append or split"
        )),
    }
}

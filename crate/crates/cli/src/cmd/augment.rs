//! `augment`: turn an anechoic corpus into a reverberant-noisy training set
//! (scenarios are simulated internally) or a reverberant test set (held-out
//! impulse responses applied as-is).

use std::fs;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;

use revad_core::acoustics::RirModel;
use revad_core::corpus::{
    build_test_set, build_training_set, pad_silence, synth_corpus, Manifest, PadPosition,
    SynthConfig, TrainingSetConfig, Utterance,
};
use revad_core::dsp::NoiseKind;
use revad_core::geometry::{read_scenario_manifest, sample_scenarios, SamplerConfig, Scenario};

use crate::config::{
    default_model, parse_model, parse_noise, parse_pad_position, parse_range, AugmentConfig,
    CorpusSource, PadSpec, ScenarioSource,
};
use crate::util::{
    build_pool, echo_config, load_config, load_corpus_dir, load_rir_dir, resolve_out, usage,
    CliError, CliResult,
};
use crate::CommonArgs;

#[derive(Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// train: simulate scenarios, mix noise, convolve. test: convolve with
    /// impulse responses from --rir-dir, no noise [default: train]
    #[arg(long)]
    pub mode: Option<String>,
    /// Generate this many synthetic utterances as the corpus
    #[arg(long)]
    pub synth: Option<usize>,
    /// Seed for the synthetic corpus [default: 0]
    #[arg(long)]
    pub synth_seed: Option<u64>,
    /// Read the corpus from <stem>.wav + <stem>.txt pairs in this directory
    #[arg(long)]
    pub corpus_dir: Option<PathBuf>,
    /// Pad every utterance with this many seconds of silence [default: none]
    #[arg(long)]
    pub pad_seconds: Option<f64>,
    /// Where the padding goes: prepend | append | split [default: append]
    #[arg(long, value_parser = parse_pad_position)]
    pub pad_position: Option<PadPosition>,
    /// Scenario manifest from `simulate` (train mode)
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    /// Sample scenarios inline: rooms to draw (train mode)
    #[arg(long)]
    pub rooms: Option<usize>,
    /// Placements per room for inline sampling [default: 20]
    #[arg(long)]
    pub placements: Option<usize>,
    /// Inline sampler seed [default: 0]
    #[arg(long)]
    pub scenario_seed: Option<u64>,
    /// Room dimension range in metres, LO,HI [default: 3,20]
    #[arg(long, value_parser = parse_range)]
    pub dim_range: Option<(f64, f64)>,
    /// Source/receiver height range in metres, LO,HI [default: 1,2]
    #[arg(long, value_parser = parse_range)]
    pub height_range: Option<(f64, f64)>,
    /// Per-room RT60 target range in seconds, LO,HI [default: 0.1,1]
    #[arg(long, value_parser = parse_range)]
    pub rt60_range: Option<(f64, f64)>,
    /// Model kind for simulated scenarios [default: image]
    #[arg(long, value_parser = parse_model)]
    pub model: Option<RirModel>,
    /// Per-entry SNR range in dB, LO,HI [default: 10,20]
    #[arg(long, value_parser = parse_range)]
    pub snr_range: Option<(f64, f64)>,
    /// Noise source: white | colored:SLOPE | file:PATH [default: white]
    #[arg(long, value_parser = parse_noise)]
    pub noise: Option<NoiseKind>,
    /// Skip the noisy anechoic copy of each utterance
    #[arg(long)]
    pub no_anechoic: bool,
    /// Extend speech labels by the scenario RT60 so reverberant tails count
    /// as speech
    #[arg(long)]
    pub label_tails: bool,
    /// Frame length of the SNR power-reference mask in ms [default: 25]
    #[arg(long)]
    pub mask_frame_ms: Option<f64>,
    /// Master seed for per-entry SNR and noise streams [default: 0]
    #[arg(long)]
    pub master_seed: Option<u64>,
    /// Simulation sample rate in Hz; must match the corpus [default: 16000]
    #[arg(long)]
    pub sample_rate: Option<u32>,
    /// Speed of sound in m/s [default: 343]
    #[arg(long)]
    pub speed_of_sound: Option<f64>,
    /// Impulse response length in seconds [default: max(1.2 × RT60, 0.25)]
    #[arg(long)]
    pub rir_seconds: Option<f64>,
    /// Directory of impulse response WAVs to apply (test mode)
    #[arg(long)]
    pub rir_dir: Option<PathBuf>,
}

impl AugmentArgs {
    fn first_flag(&self) -> Option<&'static str> {
        if self.mode.is_some() {
            Some("mode")
        } else if self.synth.is_some() {
            Some("synth")
        } else if self.synth_seed.is_some() {
            Some("synth-seed")
        } else if self.corpus_dir.is_some() {
            Some("corpus-dir")
        } else if self.pad_seconds.is_some() {
            Some("pad-seconds")
        } else if self.pad_position.is_some() {
            Some("pad-position")
        } else if self.scenarios.is_some() {
            Some("scenarios")
        } else if self.rooms.is_some() {
            Some("rooms")
        } else if self.placements.is_some() {
            Some("placements")
        } else if self.scenario_seed.is_some() {
            Some("scenario-seed")
        } else if self.dim_range.is_some() {
            Some("dim-range")
        } else if self.height_range.is_some() {
            Some("height-range")
        } else if self.rt60_range.is_some() {
            Some("rt60-range")
        } else if self.model.is_some() {
            Some("model")
        } else if self.snr_range.is_some() {
            Some("snr-range")
        } else if self.noise.is_some() {
            Some("noise")
        } else if self.no_anechoic {
            Some("no-anechoic")
        } else if self.label_tails {
            Some("label-tails")
        } else if self.mask_frame_ms.is_some() {
            Some("mask-frame-ms")
        } else if self.master_seed.is_some() {
            Some("master-seed")
        } else if self.sample_rate.is_some() {
            Some("sample-rate")
        } else if self.speed_of_sound.is_some() {
            Some("speed-of-sound")
        } else if self.rir_seconds.is_some() {
            Some("rir-seconds")
        } else if self.rir_dir.is_some() {
            Some("rir-dir")
        } else {
            None
        }
    }

    fn corpus_source(&self) -> CliResult<CorpusSource> {
        let sample_rate = self.sample_rate.unwrap_or(SynthConfig::default().sample_rate);
        match (self.synth, &self.corpus_dir) {
            (Some(count), None) => Ok(CorpusSource::Synth {
                count,
                seed: self.synth_seed.unwrap_or(0),
                synth: SynthConfig {
                    sample_rate,
                    ..SynthConfig::default()
                },
            }),
            (None, Some(path)) => Ok(CorpusSource::Dir { path: path.clone() }),
            (None, None) => Err(usage("pass a corpus: --synth N or --corpus-dir DIR")),
            (Some(_), Some(_)) => Err(usage("--synth and --corpus-dir are exclusive")),
        }
    }

    fn sampler_flags_used(&self) -> bool {
        self.rooms.is_some()
            || self.placements.is_some()
            || self.scenario_seed.is_some()
            || self.dim_range.is_some()
            || self.height_range.is_some()
            || self.rt60_range.is_some()
    }

    fn scenario_source(&self) -> CliResult<ScenarioSource> {
        if let Some(path) = &self.scenarios {
            if self.sampler_flags_used() {
                return Err(usage(
                    "--scenarios is exclusive with the inline sampler flags",
                ));
            }
            return Ok(ScenarioSource::File { path: path.clone() });
        }
        if !self.sampler_flags_used() {
            return Ok(ScenarioSource::None);
        }
        let mut sampler = SamplerConfig::default();
        if let Some(n) = self.rooms {
            sampler.n_rooms = n;
        }
        if let Some(n) = self.placements {
            sampler.placements_per_room = n;
        }
        if let Some(s) = self.scenario_seed {
            sampler.seed = s;
        }
        if let Some(r) = self.dim_range {
            sampler.dim_range = r;
        }
        if let Some(r) = self.height_range {
            sampler.height_range = r;
        }
        if let Some(r) = self.rt60_range {
            sampler.rt60_range = r;
        }
        Ok(ScenarioSource::Sample { sampler })
    }

    fn pad(&self) -> Option<PadSpec> {
        self.pad_seconds.map(|seconds| PadSpec {
            seconds,
            position: self.pad_position.unwrap_or_default(),
        })
    }

    fn resolve(&self) -> CliResult<AugmentConfig> {
        if let Some(path) = &self.common.config {
            return load_config(path, self.first_flag());
        }
        match self.mode.as_deref().unwrap_or("train") {
            "train" => {
                if self.rir_dir.is_some() {
                    return Err(usage("--rir-dir is test-mode only (pass --mode test)"));
                }
                let scenarios = self.scenario_source()?;
                if matches!(scenarios, ScenarioSource::None) && self.no_anechoic {
                    return Err(usage(
                        "nothing to build: no scenarios and --no-anechoic; pass --scenarios or \
                         sampler flags",
                    ));
                }
                let mut set = TrainingSetConfig::default();
                if let Some(r) = self.snr_range {
                    set.snr_range_db = r;
                }
                if let Some(n) = &self.noise {
                    set.noise = n.clone();
                }
                set.include_anechoic = !self.no_anechoic;
                set.label_tails = self.label_tails;
                if let Some(ms) = self.mask_frame_ms {
                    set.mask_frame_ms = ms;
                }
                if let Some(s) = self.master_seed {
                    set.master_seed = s;
                }
                if let Some(r) = self.sample_rate {
                    set.sim.sample_rate = r;
                }
                if let Some(c) = self.speed_of_sound {
                    set.sim.speed_of_sound = c;
                }
                if let Some(s) = self.rir_seconds {
                    set.sim.rir_seconds = Some(s);
                }
                Ok(AugmentConfig::Train {
                    corpus: self.corpus_source()?,
                    scenarios,
                    model: self.model.clone().unwrap_or_else(default_model),
                    set,
                    pad: self.pad(),
                })
            }
            "test" => {
                let rir_dir = self
                    .rir_dir
                    .clone()
                    .ok_or_else(|| usage("test mode needs --rir-dir DIR"))?;
                if self.scenarios.is_some() || self.sampler_flags_used() || self.model.is_some() {
                    return Err(usage(
                        "scenario and model flags are train-mode only; test mode applies \
                         --rir-dir as-is",
                    ));
                }
                Ok(AugmentConfig::Test {
                    corpus: self.corpus_source()?,
                    rir_dir,
                    pad: self.pad(),
                })
            }
            other => Err(usage(format!(
                "unknown mode {other:?}; expected train or test"
            ))),
        }
    }
}

fn load_corpus(source: &CorpusSource, pad: Option<PadSpec>) -> CliResult<Vec<Utterance<f64>>> {
    let corpus = match source {
        CorpusSource::Synth { count, seed, synth } => synth_corpus(*count, synth, *seed)?,
        CorpusSource::Dir { path } => load_corpus_dir(path)?,
    };
    match pad {
        None => Ok(corpus),
        Some(spec) => corpus
            .iter()
            .map(|utt| Ok(pad_silence(utt, spec.seconds, spec.position)?))
            .collect(),
    }
}

fn load_scenarios(source: &ScenarioSource) -> CliResult<Vec<Scenario<f64>>> {
    match source {
        ScenarioSource::File { path } => Ok(read_scenario_manifest(BufReader::new(
            fs::File::open(path)?,
        ))?),
        ScenarioSource::Sample { sampler } => {
            Ok(sample_scenarios(sampler).map_err(|e| usage(format!("sampler: {e}")))?)
        }
        ScenarioSource::None => Ok(Vec::new()),
    }
}

fn summarize(manifest: &Manifest) -> CliResult<()> {
    for failure in &manifest.failures {
        eprintln!(
            "{} × {}: {}",
            failure.utterance_id, failure.scenario_id, failure.error
        );
    }
    println!(
        "{}: {} entries, {} failures",
        manifest.manifest_id,
        manifest.entries.len(),
        manifest.failures.len()
    );
    if manifest.entries.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "every entry failed ({} failures)",
            manifest.failures.len()
        )));
    }
    Ok(())
}

pub fn run(args: &AugmentArgs) -> CliResult<()> {
    let out = resolve_out(args.common.out.clone(), "augment")?;
    let config = args.resolve()?;
    let pool = build_pool(args.common.jobs)?;
    fs::create_dir_all(&out)?;
    echo_config(&out, &config)?;

    let manifest = match &config {
        AugmentConfig::Train {
            corpus,
            scenarios,
            model,
            set,
            pad,
        } => {
            let corpus = load_corpus(corpus, *pad)?;
            let scenarios = load_scenarios(scenarios)?;
            pool.install(|| build_training_set(&corpus, &scenarios, model, set, &out))?
        }
        AugmentConfig::Test {
            corpus,
            rir_dir,
            pad,
        } => {
            let corpus = load_corpus(corpus, *pad)?;
            let rirs = load_rir_dir(rir_dir)?;
            pool.install(|| build_test_set(&corpus, &rirs, &out))?
        }
    };
    summarize(&manifest)
}

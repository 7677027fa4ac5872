//! `simulate`: sample scenarios, simulate each impulse response, and write
//! WAV + JSON sidecars plus a scenario manifest.

use std::fs;

use clap::Args;
use rayon::prelude::*;

use revad_core::acoustics::{analyze_rir, simulate_rir, RirModel, DEFAULT_FIT_RANGE_DB};
use revad_core::corpus::{write_rir_wav, RirParameters, RirSidecar};
use revad_core::geometry::{sample_scenarios, write_scenario_manifest, ScenarioRecord};

use crate::config::{parse_model, parse_range, SimulateConfig};
use crate::util::{build_pool, echo_config, load_config, resolve_out, usage, write_json, CliError, CliResult};
use crate::CommonArgs;

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Rooms to sample [default: 50]
    #[arg(long)]
    pub rooms: Option<usize>,
    /// Placements per room [default: 20]
    #[arg(long)]
    pub placements: Option<usize>,
    /// Room dimension range in metres, LO,HI [default: 3,20]
    #[arg(long, value_parser = parse_range)]
    pub dim_range: Option<(f64, f64)>,
    /// Source/receiver height range in metres, LO,HI [default: 1,2]
    #[arg(long, value_parser = parse_range)]
    pub height_range: Option<(f64, f64)>,
    /// Per-room RT60 target range in seconds, LO,HI [default: 0.1,1]
    #[arg(long, value_parser = parse_range)]
    pub rt60_range: Option<(f64, f64)>,
    /// Scenario sampler seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model kind: image | hybrid | banded_reflection | modal_low_freq |
    /// diffusion, with default parameters [default: image]
    #[arg(long, value_parser = parse_model)]
    pub model: Option<RirModel>,
    /// Output sample rate in Hz [default: 16000]
    #[arg(long)]
    pub sample_rate: Option<u32>,
    /// Speed of sound in m/s [default: 343]
    #[arg(long)]
    pub speed_of_sound: Option<f64>,
    /// Impulse response length in seconds [default: max(1.2 × RT60, 0.25)]
    #[arg(long)]
    pub rir_seconds: Option<f64>,
}

impl SimulateArgs {
    fn first_flag(&self) -> Option<&'static str> {
        if self.rooms.is_some() {
            Some("rooms")
        } else if self.placements.is_some() {
            Some("placements")
        } else if self.dim_range.is_some() {
            Some("dim-range")
        } else if self.height_range.is_some() {
            Some("height-range")
        } else if self.rt60_range.is_some() {
            Some("rt60-range")
        } else if self.seed.is_some() {
            Some("seed")
        } else if self.model.is_some() {
            Some("model")
        } else if self.sample_rate.is_some() {
            Some("sample-rate")
        } else if self.speed_of_sound.is_some() {
            Some("speed-of-sound")
        } else if self.rir_seconds.is_some() {
            Some("rir-seconds")
        } else {
            None
        }
    }

    fn resolve(&self) -> CliResult<SimulateConfig> {
        if let Some(path) = &self.common.config {
            return load_config(path, self.first_flag());
        }
        let mut config = SimulateConfig::default();
        if let Some(n) = self.rooms {
            config.sampler.n_rooms = n;
        }
        if let Some(n) = self.placements {
            config.sampler.placements_per_room = n;
        }
        if let Some(r) = self.dim_range {
            config.sampler.dim_range = r;
        }
        if let Some(r) = self.height_range {
            config.sampler.height_range = r;
        }
        if let Some(r) = self.rt60_range {
            config.sampler.rt60_range = r;
        }
        if let Some(s) = self.seed {
            config.sampler.seed = s;
        }
        if let Some(m) = &self.model {
            config.model = m.clone();
        }
        if let Some(r) = self.sample_rate {
            config.sim.sample_rate = r;
        }
        if let Some(c) = self.speed_of_sound {
            config.sim.speed_of_sound = c;
        }
        if let Some(s) = self.rir_seconds {
            config.sim.rir_seconds = Some(s);
        }
        Ok(config)
    }
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let out = resolve_out(args.common.out.clone(), "simulate")?;
    let config = args.resolve()?;
    let pool = build_pool(args.common.jobs)?;

    let scenarios =
        sample_scenarios::<f64>(&config.sampler).map_err(|e| usage(format!("sampler: {e}")))?;
    let rir_dir = out.join("rirs");
    fs::create_dir_all(&rir_dir)?;
    echo_config(&out, &config)?;
    write_scenario_manifest(&scenarios, fs::File::create(out.join("scenarios.jsonl"))?)?;

    struct Line {
        id: String,
        target: f64,
        est: Option<f64>,
    }
    let results: Vec<Result<Line, (String, String)>> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|sc| {
                let simulate = || -> CliResult<Line> {
                    let rir = simulate_rir(sc, &config.model, &config.sim)?;
                    let est = analyze_rir(&rir, DEFAULT_FIT_RANGE_DB).ok().map(|a| a.rt60);
                    write_rir_wav(
                        &rir_dir.join(format!("{}.wav", sc.id)),
                        &rir.samples,
                        rir.sample_rate,
                    )?;
                    let sidecar = RirSidecar {
                        scenario_id: sc.id.clone(),
                        kind: config.model.name().to_string(),
                        parameters: RirParameters {
                            model: config.model.clone(),
                            sim: config.sim.clone(),
                            scenario: ScenarioRecord::from_scenario(sc),
                        },
                        rt60_est: est,
                    };
                    write_json(&rir_dir.join(format!("{}.json", sc.id)), &sidecar)?;
                    Ok(Line {
                        id: sc.id.clone(),
                        target: sc.rt60_target,
                        est,
                    })
                };
                simulate().map_err(|e| (sc.id.clone(), e.to_string()))
            })
            .collect()
    });

    let mut failed = 0usize;
    let mut rel_errors = Vec::new();
    for result in &results {
        match result {
            Ok(line) => match line.est {
                Some(est) => {
                    rel_errors.push((est - line.target).abs() / line.target);
                    println!("{}  rt60 target {:.3} s  est {:.3} s", line.id, line.target, est);
                }
                None => println!("{}  rt60 target {:.3} s  est n/a", line.id, line.target),
            },
            Err((id, msg)) => {
                failed += 1;
                eprintln!("{id}: {msg}");
            }
        }
    }
    if !rel_errors.is_empty() {
        rel_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "{} scenarios, median rt60 relative error {:.3}",
            results.len() - failed,
            rel_errors[rel_errors.len() / 2]
        );
    }
    if failed > 0 {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{failed} of {} scenarios failed",
            results.len()
        )));
    }
    println!("wrote {} impulse responses to {}", results.len(), rir_dir.display());
    Ok(())
}

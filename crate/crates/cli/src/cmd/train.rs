//! `train`: extract features over a manifest and fit the logistic frame
//! classifier.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use revad_core::corpus::load_manifest;
use revad_core::vad::{train, FrameSpec, TrainConfig};

use crate::config::TrainCliConfig;
use crate::util::{
    build_pool, echo_config, load_config, manifest_features, resolve_out, usage, CliResult,
};
use crate::CommonArgs;

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Training manifest (manifest.jsonl from `augment`)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Frame length in ms [default: 25]
    #[arg(long)]
    pub frame_ms: Option<f64>,
    /// Hop in ms [default: 10]
    #[arg(long)]
    pub hop_ms: Option<f64>,
    /// Gradient-descent epochs [default: 30]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate [default: 0.1]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// L2 penalty on the weights [default: 1e-4]
    #[arg(long)]
    pub l2: Option<f64>,
    /// Mini-batch size [default: 256]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Shuffle seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

impl TrainArgs {
    fn first_flag(&self) -> Option<&'static str> {
        if self.manifest.is_some() {
            Some("manifest")
        } else if self.frame_ms.is_some() {
            Some("frame-ms")
        } else if self.hop_ms.is_some() {
            Some("hop-ms")
        } else if self.epochs.is_some() {
            Some("epochs")
        } else if self.learning_rate.is_some() {
            Some("learning-rate")
        } else if self.l2.is_some() {
            Some("l2")
        } else if self.batch_size.is_some() {
            Some("batch-size")
        } else if self.seed.is_some() {
            Some("seed")
        } else {
            None
        }
    }

    fn resolve(&self) -> CliResult<TrainCliConfig> {
        if let Some(path) = &self.common.config {
            return load_config(path, self.first_flag());
        }
        let manifest = self
            .manifest
            .clone()
            .ok_or_else(|| usage("pass --manifest FILE (or --config)"))?;
        let mut frame = FrameSpec::default();
        if let Some(ms) = self.frame_ms {
            frame.frame_ms = ms;
        }
        if let Some(ms) = self.hop_ms {
            frame.hop_ms = ms;
        }
        let mut hyper = TrainConfig::default();
        if let Some(n) = self.epochs {
            hyper.epochs = n;
        }
        if let Some(lr) = self.learning_rate {
            hyper.learning_rate = lr;
        }
        if let Some(l2) = self.l2 {
            hyper.l2 = l2;
        }
        if let Some(n) = self.batch_size {
            hyper.batch_size = n;
        }
        if let Some(s) = self.seed {
            hyper.seed = s;
        }
        Ok(TrainCliConfig {
            manifest,
            frame,
            hyper,
        })
    }
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let out = resolve_out(args.common.out.clone(), "train")?;
    let mut config = args.resolve()?;
    let pool = build_pool(args.common.jobs)?;
    fs::create_dir_all(&out)?;

    let manifest = load_manifest(&config.manifest)?;
    config.hyper.manifest_id = manifest.manifest_id.clone();
    echo_config(&out, &config)?;

    let (features, labels) = pool.install(|| manifest_features(&manifest, &config.frame))?;
    let positives = labels.iter().filter(|&&l| l).count();
    println!(
        "{}: {} frames from {} entries ({:.1}% speech)",
        manifest.manifest_id,
        features.n_frames,
        manifest.entries.len(),
        100.0 * positives as f64 / labels.len() as f64
    );

    let model = train(&features, &labels, &config.hyper)?;
    let path = out.join("model.json");
    model.save(&path)?;
    println!(
        "trained {} epochs, final loss {:.6}, model at {}",
        config.hyper.epochs,
        model.meta.epoch_losses.last().copied().unwrap_or(f64::NAN),
        path.display()
    );
    Ok(())
}

//! `evaluate`: score a test manifest with a trained model and write the
//! metric table, ROC curve, and a JSON artifact for `report`.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use revad_core::corpus::load_manifest;
use revad_core::eval::{roc_and_auc, MetricReport};
use revad_core::vad::{FrameSpec, VadModel};

use crate::config::{default_threshold, EvaluateConfig};
use crate::util::{
    build_pool, echo_config, load_config, manifest_features, resolve_out, usage, write_json,
    CliResult, EvalArtifact,
};
use crate::CommonArgs;

#[derive(Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trained model (model.json from `train`)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Test manifest (manifest.jsonl from `augment`)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Decision threshold on scores [default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Frame length in ms; match training [default: 25]
    #[arg(long)]
    pub frame_ms: Option<f64>,
    /// Hop in ms; match training [default: 10]
    #[arg(long)]
    pub hop_ms: Option<f64>,
    /// Row label in reports [default: manifest file stem]
    #[arg(long)]
    pub dataset_id: Option<String>,
}

impl EvaluateArgs {
    fn first_flag(&self) -> Option<&'static str> {
        if self.model.is_some() {
            Some("model")
        } else if self.manifest.is_some() {
            Some("manifest")
        } else if self.threshold.is_some() {
            Some("threshold")
        } else if self.frame_ms.is_some() {
            Some("frame-ms")
        } else if self.hop_ms.is_some() {
            Some("hop-ms")
        } else if self.dataset_id.is_some() {
            Some("dataset-id")
        } else {
            None
        }
    }

    fn resolve(&self) -> CliResult<EvaluateConfig> {
        if let Some(path) = &self.common.config {
            return load_config(path, self.first_flag());
        }
        let model = self
            .model
            .clone()
            .ok_or_else(|| usage("pass --model FILE (or --config)"))?;
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
        Ok(EvaluateConfig {
            model,
            manifest,
            threshold: self.threshold.unwrap_or_else(default_threshold),
            frame,
            dataset_id: self.dataset_id.clone(),
        })
    }
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let out = resolve_out(args.common.out.clone(), "evaluate")?;
    let config = args.resolve()?;
    let pool = build_pool(args.common.jobs)?;
    fs::create_dir_all(&out)?;
    echo_config(&out, &config)?;

    let model = VadModel::load(&config.model)?;
    let manifest = load_manifest(&config.manifest)?;
    let dataset_id = config
        .dataset_id
        .clone()
        .unwrap_or_else(|| manifest.manifest_id.clone());

    let (features, truth) = pool.install(|| manifest_features(&manifest, &config.frame))?;
    let scores = model.score(&features)?;
    let report = MetricReport::new(dataset_id, &scores, &truth, config.threshold)?;
    let roc = roc_and_auc(&scores, &truth)?;

    fs::write(
        out.join("metrics.csv"),
        format!("{}\n{}\n", MetricReport::CSV_HEADER, report.csv_row()),
    )?;
    fs::write(out.join("roc.csv"), roc.to_csv())?;
    write_json(&out.join("eval.json"), &EvalArtifact { report: report.clone(), roc: roc.clone() })?;

    println!(
        "{}: {} frames  acc {:.4}  prec {:.4}  rec {:.4}  f1 {:.4}  auc {:.4} (threshold {})",
        report.dataset_id,
        features.n_frames,
        report.metrics.accuracy,
        report.metrics.precision,
        report.metrics.recall,
        report.metrics.f1,
        roc.auc,
        config.threshold
    );
    Ok(())
}

//! `report`: join per-condition evaluations into the
//! (training condition × environment) grid with per-measure deltas — the
//! anechoic-vs-augmented comparison as plot-ready tables.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use revad_core::eval::{compare_conditions, Comparison, MetricReport};

use crate::config::{PairSpec, ReportConfig};
use crate::util::{
    echo_config, load_config, read_json, resolve_out, usage, write_json, CliResult, EvalArtifact,
};
use crate::CommonArgs;

#[derive(Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// ENV=ANECHOIC,AUGMENTED — an environment name and the two `evaluate`
    /// output directories (condition A then B). Repeatable.
    #[arg(long = "pair", value_parser = parse_pair)]
    pub pairs: Vec<PairSpec>,
}

fn parse_pair(s: &str) -> Result<PairSpec, String> {
    let (environment, rest) = s
        .split_once('=')
        .ok_or_else(|| format!("expected ENV=ANECHOIC,AUGMENTED, got {s:?}"))?;
    let (a, b) = rest
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated paths after =, got {rest:?}"))?;
    Ok(PairSpec {
        environment: environment.to_string(),
        anechoic: a.into(),
        augmented: b.into(),
    })
}

impl ReportArgs {
    fn resolve(&self) -> CliResult<ReportConfig> {
        if let Some(path) = &self.common.config {
            let used = if self.pairs.is_empty() {
                None
            } else {
                Some("pair")
            };
            return load_config(path, used);
        }
        if self.pairs.is_empty() {
            return Err(usage("pass at least one --pair ENV=ANECHOIC,AUGMENTED"));
        }
        Ok(ReportConfig {
            pairs: self.pairs.clone(),
        })
    }
}

/// Accepts either an `evaluate` output directory or its eval.json directly.
fn load_artifact(path: &Path) -> CliResult<EvalArtifact> {
    let file = if path.is_dir() {
        path.join("eval.json")
    } else {
        PathBuf::from(path)
    };
    read_json(&file)
}

#[derive(Serialize)]
struct EnvReport {
    environment: String,
    anechoic: EvalArtifact,
    augmented: EvalArtifact,
    comparison: Comparison,
}

pub fn run(args: &ReportArgs) -> CliResult<()> {
    let out = resolve_out(args.common.out.clone(), "report")?;
    let config = args.resolve()?;
    fs::create_dir_all(&out)?;
    echo_config(&out, &config)?;

    let mut grid = format!("environment,condition,{},auc\n", MetricReport::CSV_HEADER);
    let mut deltas = format!("environment,{}\n", Comparison::CSV_HEADER);
    let mut env_reports = Vec::new();
    for pair in &config.pairs {
        let a = load_artifact(&pair.anechoic)?;
        let b = load_artifact(&pair.augmented)?;
        let comparison = compare_conditions(&a.report, &a.roc, &b.report, &b.roc)?;
        for (condition, art) in [("anechoic", &a), ("augmented", &b)] {
            grid.push_str(&format!(
                "{},{},{},{}\n",
                pair.environment,
                condition,
                art.report.csv_row(),
                art.roc.auc
            ));
        }
        deltas.push_str(&format!("{},{}\n", pair.environment, comparison.csv_row()));
        println!(
            "{}: accuracy {:+.4}, auc {:+.4} (augmented − anechoic)",
            pair.environment, comparison.accuracy_delta, comparison.auc_delta
        );
        env_reports.push(EnvReport {
            environment: pair.environment.clone(),
            anechoic: a,
            augmented: b,
            comparison,
        });
    }

    fs::write(out.join("grid.csv"), grid)?;
    fs::write(out.join("deltas.csv"), deltas)?;
    write_json(&out.join("report.json"), &env_reports)?;
    println!(
        "{} environments → {}",
        env_reports.len(),
        out.join("grid.csv").display()
    );
    Ok(())
}

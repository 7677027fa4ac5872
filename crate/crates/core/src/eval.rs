//! Frame-level detection measures: confusion counts, accuracy/precision/
//! recall/F1, ROC curves with trapezoidal AUC, and paired condition
//! comparisons for the anechoic-vs-augmented training experiment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("scores and truth differ in length: {scores} vs {truth}")]
    LengthMismatch { scores: usize, truth: usize },
    #[error("threshold must be finite")]
    NonFiniteThreshold,
    #[error("scores must be finite")]
    NonFiniteScore,
    #[error("no frames to evaluate")]
    Empty,
    #[error("truth contains only one class; ROC needs both")]
    SingleClass,
    #[error("reports cover different datasets: {left:?} vs {right:?}")]
    DatasetMismatch { left: String, right: String },
}

/// Frame counts behind every derived measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// Decisions are `score ≥ threshold`.
pub fn confusion(
    scores: &[f64],
    truth: &[bool],
    threshold: f64,
) -> Result<ConfusionCounts, EvalError> {
    if scores.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            truth: truth.len(),
        });
    }
    if !threshold.is_finite() {
        return Err(EvalError::NonFiniteThreshold);
    }
    let mut c = ConfusionCounts {
        true_pos: 0,
        false_pos: 0,
        true_neg: 0,
        false_neg: 0,
    };
    for (&s, &t) in scores.iter().zip(truth) {
        match (s >= threshold, t) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, false) => c.true_neg += 1,
            (false, true) => c.false_neg += 1,
        }
    }
    Ok(c)
}

/// The four standard measures. Zero-denominator conventions: precision is 0
/// when nothing was flagged positive, recall is 0 when the truth has no
/// positives, and F1 is 0 when precision + recall is 0 — conservative values
/// that keep batch reports free of NaN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(c: &ConfusionCounts) -> Result<Metrics, EvalError> {
        let total = c.total();
        if total == 0 {
            return Err(EvalError::Empty);
        }
        let tp = c.true_pos as f64;
        let accuracy = (c.true_pos + c.true_neg) as f64 / total as f64;
        let flagged = c.true_pos + c.false_pos;
        let precision = if flagged == 0 {
            0.0
        } else {
            tp / flagged as f64
        };
        let actual = c.true_pos + c.false_neg;
        let recall = if actual == 0 { 0.0 } else { tp / actual as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Ok(Metrics {
            accuracy,
            precision,
            recall,
            f1,
        })
    }
}

/// One evaluated condition at a fixed operating threshold.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricReport {
    pub dataset_id: String,
    pub threshold: f64,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

impl MetricReport {
    pub fn new(
        dataset_id: impl Into<String>,
        scores: &[f64],
        truth: &[bool],
        threshold: f64,
    ) -> Result<MetricReport, EvalError> {
        let counts = confusion(scores, truth, threshold)?;
        let metrics = Metrics::from_counts(&counts)?;
        Ok(MetricReport {
            dataset_id: dataset_id.into(),
            threshold,
            counts,
            metrics,
        })
    }

    pub const CSV_HEADER: &'static str =
        "dataset,threshold,true_pos,false_pos,true_neg,false_neg,accuracy,precision,recall,f1";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.dataset_id,
            self.threshold,
            self.counts.true_pos,
            self.counts.false_pos,
            self.counts.true_neg,
            self.counts.false_neg,
            self.metrics.accuracy,
            self.metrics.precision,
            self.metrics.recall,
            self.metrics.f1,
        )
    }
}

/// Receiver operating characteristic from a full threshold sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false-alarm rate, detection rate)`, starting at (0,0), ending at
    /// (1,1), non-decreasing in both coordinates.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("false_alarm,detection\n");
        for (fa, det) in &self.points {
            out.push_str(&format!("{fa},{det}\n"));
        }
        out
    }
}

/// Sweeps the decision threshold over every distinct score.
///
/// Scores are visited in descending order with ties grouped, so each curve
/// point is reachable by an actual threshold; the trapezoid over a tie group
/// awards half credit, making the AUC equal to the probability that a random
/// positive outscores a random negative (ties counting one half).
pub fn roc_and_auc(scores: &[f64], truth: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            truth: truth.len(),
        });
    }
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let n_pos = truth.iter().filter(|&&t| t).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = Vec::with_capacity(scores.len() + 2);
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    let auc = auc_from_points(&points);
    Ok(RocCurve { points, auc })
}

/// Trapezoidal area under an ordered `(x, y)` polyline.
pub fn auc_from_points(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * 0.5)
        .sum()
}

/// Per-measure differences between two conditions on the same test set
/// (B − A, typically A = anechoic training, B = augmented training).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Comparison {
    pub dataset_id: String,
    pub accuracy_delta: f64,
    pub precision_delta: f64,
    pub recall_delta: f64,
    pub f1_delta: f64,
    pub auc_delta: f64,
    /// Deltas divided by condition A's value; 0 when A's value is 0.
    pub accuracy_rel: f64,
    pub precision_rel: f64,
    pub recall_rel: f64,
    pub f1_rel: f64,
    pub auc_rel: f64,
}

fn relative(delta: f64, base: f64) -> f64 {
    if base != 0.0 {
        delta / base
    } else {
        0.0
    }
}

pub fn compare_conditions(
    report_a: &MetricReport,
    roc_a: &RocCurve,
    report_b: &MetricReport,
    roc_b: &RocCurve,
) -> Result<Comparison, EvalError> {
    if report_a.dataset_id != report_b.dataset_id {
        return Err(EvalError::DatasetMismatch {
            left: report_a.dataset_id.clone(),
            right: report_b.dataset_id.clone(),
        });
    }
    let (a, b) = (&report_a.metrics, &report_b.metrics);
    Ok(Comparison {
        dataset_id: report_a.dataset_id.clone(),
        accuracy_delta: b.accuracy - a.accuracy,
        precision_delta: b.precision - a.precision,
        recall_delta: b.recall - a.recall,
        f1_delta: b.f1 - a.f1,
        auc_delta: roc_b.auc - roc_a.auc,
        accuracy_rel: relative(b.accuracy - a.accuracy, a.accuracy),
        precision_rel: relative(b.precision - a.precision, a.precision),
        recall_rel: relative(b.recall - a.recall, a.recall),
        f1_rel: relative(b.f1 - a.f1, a.f1),
        auc_rel: relative(roc_b.auc - roc_a.auc, roc_a.auc),
    })
}

impl Comparison {
    pub const CSV_HEADER: &'static str = "dataset,accuracy_delta,precision_delta,recall_delta,\
         f1_delta,auc_delta,accuracy_rel,precision_rel,recall_rel,f1_rel,auc_rel";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.dataset_id,
            self.accuracy_delta,
            self.precision_delta,
            self.recall_delta,
            self.f1_delta,
            self.auc_delta,
            self.accuracy_rel,
            self.precision_rel,
            self.recall_rel,
            self.f1_rel,
            self.auc_rel,
        )
    }
}

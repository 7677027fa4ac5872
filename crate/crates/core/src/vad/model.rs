use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Features, VadError};

pub const MODEL_VERSION: u32 = 1;

/// Hyper-parameters for [`train`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Coefficient of the ½‖w‖² penalty (the bias is not regularized).
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Identifier of the manifest the training set came from, echoed into
    /// the model metadata.
    pub manifest_id: String,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.1,
            l2: 1e-4,
            batch_size: 256,
            seed: 0,
            manifest_id: String::new(),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), VadError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(VadError::BadConfig(
                "epochs and batch_size must be at least 1".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(VadError::BadConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(VadError::BadConfig(format!(
                "l2 penalty must be non-negative, got {}",
                self.l2
            )));
        }
        Ok(())
    }
}

/// Provenance and training trace stored with the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub manifest_id: String,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Full-dataset regularized loss after each epoch.
    pub epoch_losses: Vec<f64>,
    pub version: u32,
}

/// Logistic frame classifier: `σ(w·normalize(x) + b)` with per-dimension
/// normalization statistics fitted on the training data only.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VadModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub norm_mean: Vec<f64>,
    pub norm_scale: Vec<f64>,
    pub meta: TrainMeta,
}

impl VadModel {
    /// Per-frame speech probabilities.
    pub fn score(&self, features: &Features) -> Result<Vec<f64>, VadError> {
        if features.dim != self.weights.len() {
            return Err(VadError::DimensionMismatch {
                expected: self.weights.len(),
                got: features.dim,
            });
        }
        Ok((0..features.n_frames)
            .map(|i| {
                let row = features.row(i);
                let z: f64 = row
                    .iter()
                    .zip(&self.weights)
                    .zip(self.norm_mean.iter().zip(&self.norm_scale))
                    .map(|((&x, &w), (&m, &s))| w * (x - m) / s)
                    .sum::<f64>()
                    + self.bias;
                sigmoid(z)
            })
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<(), VadError> {
        Ok(std::fs::write(path, serde_json::to_vec_pretty(self)?)?)
    }

    pub fn load(path: &Path) -> Result<VadModel, VadError> {
        let model: VadModel = serde_json::from_slice(&std::fs::read(path)?)?;
        if model.meta.version != MODEL_VERSION {
            return Err(VadError::UnsupportedVersion {
                found: model.meta.version,
                expected: MODEL_VERSION,
            });
        }
        let dim = model.weights.len();
        if model.norm_mean.len() != dim
            || model.norm_scale.len() != dim
            || !model.bias.is_finite()
            || model.weights.iter().any(|w| !w.is_finite())
            || model.norm_scale.iter().any(|&s| !(s > 0.0))
        {
            return Err(VadError::NonFinite("model file"));
        }
        Ok(model)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean regularized log loss and its gradient for logistic regression over
/// row-major `data` (`labels.len()` rows of `weights.len()` columns).
///
/// Loss: `mean_j [ln(1 + e^{z_j}) − y_j·z_j] + (l2/2)·‖w‖²`, computed in the
/// overflow-free form; gradients are `Xᵀ(σ(z) − y)/n + l2·w` and
/// `mean(σ(z) − y)`. Public so the analytic gradient can be checked against
/// finite differences.
pub fn loss_and_grad(
    weights: &[f64],
    bias: f64,
    data: &[f64],
    labels: &[bool],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let dim = weights.len();
    let n = labels.len();
    assert_eq!(data.len(), n * dim, "data is not {n} rows of {dim}");
    let mut loss = 0.0;
    let mut grad_w = vec![0.0f64; dim];
    let mut grad_b = 0.0;
    for (j, &label) in labels.iter().enumerate() {
        let row = &data[j * dim..(j + 1) * dim];
        let z: f64 = row.iter().zip(weights).map(|(&x, &w)| x * w).sum::<f64>() + bias;
        let y = if label { 1.0 } else { 0.0 };
        // ln(1 + e^z) − y·z, rewritten so the exponent is never positive.
        loss += z.max(0.0) - y * z + (-z.abs()).exp().ln_1p();
        let r = sigmoid(z) - y;
        for (g, &x) in grad_w.iter_mut().zip(row) {
            *g += r * x;
        }
        grad_b += r;
    }
    let inv_n = 1.0 / n as f64;
    loss *= inv_n;
    grad_b *= inv_n;
    for (g, &w) in grad_w.iter_mut().zip(weights) {
        *g = *g * inv_n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad_w, grad_b)
}

/// Fits a logistic model by seeded mini-batch gradient descent.
/// Normalization (mean and standard deviation per dimension; constant
/// dimensions get scale 1) comes from this data only — scoring applies the
/// stored statistics, never restandardizes.
pub fn train(
    features: &Features,
    labels: &[bool],
    config: &TrainConfig,
) -> Result<VadModel, VadError> {
    config.validate()?;
    let n = features.n_frames;
    let dim = features.dim;
    if labels.len() != n {
        return Err(VadError::LengthMismatch {
            features: n,
            labels: labels.len(),
        });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == n {
        return Err(VadError::SingleClass);
    }
    if features.data.iter().any(|v| !v.is_finite()) {
        return Err(VadError::NonFinite("features"));
    }

    let (norm_mean, norm_scale) = fit_normalization(&features.data, n, dim);
    let mut data = features.data.clone();
    for row in data.chunks_exact_mut(dim) {
        for ((x, &m), &s) in row.iter_mut().zip(&norm_mean).zip(&norm_scale) {
            *x = (*x - m) / s;
        }
    }

    let mut weights = vec![0.0f64; dim];
    let mut bias = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut grad = vec![0.0f64; dim];

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for &j in batch {
                let row = &data[j * dim..(j + 1) * dim];
                let z: f64 =
                    row.iter().zip(&weights).map(|(&x, &w)| x * w).sum::<f64>() + bias;
                let r = sigmoid(z) - if labels[j] { 1.0 } else { 0.0 };
                for (g, &x) in grad.iter_mut().zip(row) {
                    *g += r * x;
                }
                grad_b += r;
            }
            let inv = 1.0 / batch.len() as f64;
            for (w, &g) in weights.iter_mut().zip(&grad) {
                *w -= config.learning_rate * (g * inv + config.l2 * *w);
            }
            bias -= config.learning_rate * grad_b * inv;
        }
        let (loss, _, _) = loss_and_grad(&weights, bias, &data, labels, config.l2);
        epoch_losses.push(loss);
    }

    Ok(VadModel {
        weights,
        bias,
        norm_mean,
        norm_scale,
        meta: TrainMeta {
            manifest_id: config.manifest_id.clone(),
            epochs: config.epochs,
            learning_rate: config.learning_rate,
            l2: config.l2,
            batch_size: config.batch_size,
            seed: config.seed,
            epoch_losses,
            version: MODEL_VERSION,
        },
    })
}

fn fit_normalization(data: &[f64], n: usize, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0f64; dim];
    for row in data.chunks_exact(dim) {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0f64; dim];
    for row in data.chunks_exact(dim) {
        for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let scale = var
        .iter()
        .map(|v| {
            let std = (v / n as f64).sqrt();
            if std > 1e-12 {
                std
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

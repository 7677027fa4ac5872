//! Voice-activity detection: a trainable logistic frame classifier over
//! hand-crafted spectral features, plus an untrained energy-threshold
//! baseline. Both consume the same framing so their decisions line up with
//! the frame-level ground truth produced by [`frame_labels`].

mod energy;
mod features;
mod model;

use thiserror::Error;

pub use energy::energy_vad;
pub use features::{
    extract_features, frame_labels, Features, FrameSpec, BASE_DIM, CONTEXT_FRAMES,
    ENERGY_FLOOR_DB, FEAT_BANDS, FEAT_CENTROID, FEAT_FLATNESS, FEAT_LOG_ENERGY, FEAT_ZCR,
    STACKED_DIM,
};
pub use model::{loss_and_grad, train, TrainConfig, TrainMeta, VadModel, MODEL_VERSION};

#[derive(Debug, Error)]
pub enum VadError {
    #[error("frame spec needs 0 < hop ≤ frame, got frame {frame_ms} ms / hop {hop_ms} ms")]
    BadFrameSpec { frame_ms: f64, hop_ms: f64 },
    #[error("signal has {samples} samples but one frame needs {frame}")]
    SignalTooShort { samples: usize, frame: usize },
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("training data contains only one class")]
    SingleClass,
    #[error("model expects {expected}-dimensional features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0} contains non-finite values")]
    NonFinite(&'static str),
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("model file is version {found}, this build reads version {expected}")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

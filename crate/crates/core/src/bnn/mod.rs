//! Fully-connected binary neural networks.
//!
//! Hidden layers compute affine → batch norm → sign with `{0,1}` outputs;
//! the output layer is a full-precision affine map into softmax logits.
//! Weights stay full precision. Gradients pass the sign through the
//! saturation-aware straight-through estimator ([`ste_backward`]).

mod checkpoint;
mod model;
mod optim;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use model::{
    argmax_rows, softmax_cross_entropy, ArchitectureSpec, BatchNorm, BnnModel, ForwardTrace, Gradients, HiddenLayer,
    LayerGradients, LayerTrace, Mode, OutputLayer, Quantizer, BN_EPSILON, BN_MOMENTUM,
};
pub use optim::{AdamHyper, OptimizerKind, OptimizerState};
pub use train::{evaluate_accuracy, extract_binary_activations, train_epoch, train_step};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BnnError {
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("expected input width {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("model is in {found:?} mode, operation requires {expected:?} mode")]
    ModeMismatch { expected: Mode, found: Mode },
    #[error("training-mode trace is missing batch statistics")]
    MissingBatchStatistics,
    #[error("{labels} labels for {samples} samples")]
    LabelCount { samples: usize, labels: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("gradient layout does not match the model")]
    GradientShape,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BnnError>;

/// Sign quantiser: `1` if `z > 0`, else `0`.
pub fn sign_forward(z: f64) -> Result<u8> {
    if !z.is_finite() {
        return Err(BnnError::NonFinite(z));
    }
    Ok(u8::from(z > 0.0))
}

/// Straight-through gradient: passes `upstream` where `-1 <= z <= 1` and
/// cancels it otherwise.
#[inline]
pub fn ste_backward(z: f64, upstream: f64) -> f64 {
    if (-1.0..=1.0).contains(&z) {
        upstream
    } else {
        0.0
    }
}

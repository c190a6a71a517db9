//! Dataset ingestion: IDX image files, the 12-bit SZT task, deterministic
//! splits and binary activation dumps.

mod dump;
mod idx;
mod szt;

pub use dump::{read_activation_dump, write_activation_dump, ActivationDump, DUMP_MAGIC, DUMP_VERSION};
pub use idx::{load_idx, load_idx_limited, IDX_CLASS_COUNT, IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC};
pub use szt::{generate_szt_standin, load_szt, szt_score, write_szt, SZT_CLASSES, SZT_SAMPLES, SZT_WIDTH};

use std::path::PathBuf;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { path: PathBuf, expected: u32, found: u32 },
    #[error("{path}: truncated, expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("{path}: {extra} unexpected trailing bytes")]
    TrailingBytes { path: PathBuf, extra: usize },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("line {line}: expected {expected} input bits, found {found}")]
    SztDimension { line: usize, expected: usize, found: usize },
    #[error("line {line}: expected `<bits> <label>`")]
    Malformed { line: usize },
    #[error("line {line}: value {value:?} is not 0 or 1")]
    SztDomain { line: usize, value: String },
    #[error("expected {expected} samples, found {found}")]
    SampleCount { expected: usize, found: usize },
    #[error("line {line}: duplicate input pattern")]
    DuplicatePattern { line: usize },
    #[error("unsupported dump version {0}")]
    UnsupportedVersion(u16),
    #[error("validation fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, DataError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> DataError {
    let path = path.into();
    move |source| DataError::Io { path, source }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    /// `N × D`, values in `[0, 1]`.
    pub inputs: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, inputs: Array2<f64>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if inputs.nrows() != labels.len() {
            return Err(DataError::CountMismatch {
                images: inputs.nrows(),
                labels: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= class_count) {
            return Err(DataError::LabelOutOfRange {
                label,
                classes: class_count,
            });
        }
        Ok(Self {
            name: name.into(),
            inputs,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            inputs: self.inputs.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
        }
    }

    /// The first `n` samples (or all of them).
    pub fn head(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }

    pub fn labels_u32(&self) -> Vec<u32> {
        self.labels.iter().map(|&l| l as u32).collect()
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.class_count];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }
}

/// Number of validation samples for a split: `floor(N · fraction)`.
pub fn validation_size(n: usize, fraction: f64) -> usize {
    // the epsilon keeps products such as 100 · 0.29 from rounding down a whole sample
    ((n as f64 * fraction) + 1e-9).floor() as usize
}

/// Shuffled, disjoint and exhaustive split into `(train, validation)`.
/// Both parts keep the original sample order.
pub fn split(
    dataset: &LabeledDataset,
    validation_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(DataError::InvalidFraction(validation_fraction));
    }
    let (train_idx, val_idx) = split_indices(dataset.len(), validation_fraction, seed);
    Ok((dataset.subset(&train_idx), dataset.subset(&val_idx)))
}

pub fn split_indices(n: usize, validation_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_val = validation_size(n, validation_fraction);
    let mut val = order[..n_val].to_vec();
    let mut train = order[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    (train, val)
}

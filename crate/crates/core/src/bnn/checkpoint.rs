//! JSON checkpoints. Every tensor is stored row-major as 64-bit floats and
//! the float formatting round-trips exactly.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{ArchitectureSpec, BatchNorm, BnnError, BnnModel, HiddenLayer, Mode, OptimizerState, OutputLayer, Result};

pub const CHECKPOINT_FORMAT: &str = "ipbnn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    fn from_array(a: &Array2<f64>) -> Self {
        Self {
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.iter().copied().collect(),
        }
    }

    fn into_array(self) -> Result<Array2<f64>> {
        Array2::from_shape_vec((self.rows, self.cols), self.data)
            .map_err(|e| BnnError::Checkpoint(format!("bad matrix shape: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct NormRecord {
    gamma: Vec<f64>,
    beta: Vec<f64>,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
    momentum: f64,
    eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LayerRecord {
    weight: Matrix,
    bias: Vec<f64>,
    norm: Option<NormRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    format: String,
    version: u32,
    architecture: ArchitectureSpec,
    mode: Mode,
    hidden: Vec<LayerRecord>,
    output: LayerRecord,
    optimizer: Option<OptimizerState>,
}

impl Checkpoint {
    pub fn capture(model: &BnnModel, optimizer: Option<&OptimizerState>) -> Self {
        let hidden = model
            .hidden
            .iter()
            .map(|l| LayerRecord {
                weight: Matrix::from_array(&l.weight),
                bias: l.bias.to_vec(),
                norm: l.norm.as_ref().map(|n| NormRecord {
                    gamma: n.gamma.to_vec(),
                    beta: n.beta.to_vec(),
                    running_mean: n.running_mean.to_vec(),
                    running_var: n.running_var.to_vec(),
                    momentum: n.momentum,
                    eps: n.eps,
                }),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            architecture: model.arch.clone(),
            mode: model.mode,
            hidden,
            output: LayerRecord {
                weight: Matrix::from_array(&model.output.weight),
                bias: model.output.bias.to_vec(),
                norm: None,
            },
            optimizer: optimizer.cloned(),
        }
    }

    pub fn restore(self) -> Result<(BnnModel, Option<OptimizerState>)> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(BnnError::Checkpoint(format!(
                "unsupported format {} v{}",
                self.format, self.version
            )));
        }
        self.architecture.validate()?;
        if self.hidden.len() != self.architecture.hidden_widths.len() {
            return Err(BnnError::Checkpoint("layer count does not match architecture".into()));
        }
        let mut hidden = Vec::with_capacity(self.hidden.len());
        let mut fan_in = self.architecture.input_dim;
        for (rec, &width) in self.hidden.into_iter().zip(&self.architecture.hidden_widths) {
            let weight = rec.weight.into_array()?;
            if weight.dim() != (fan_in, width) || rec.bias.len() != width {
                return Err(BnnError::Checkpoint("tensor shape does not match architecture".into()));
            }
            let norm = rec.norm.map(|n| BatchNorm {
                gamma: Array1::from(n.gamma),
                beta: Array1::from(n.beta),
                running_mean: Array1::from(n.running_mean),
                running_var: Array1::from(n.running_var),
                momentum: n.momentum,
                eps: n.eps,
            });
            if norm.is_some() != self.architecture.batch_norm {
                return Err(BnnError::Checkpoint(
                    "batch-norm state does not match architecture".into(),
                ));
            }
            hidden.push(HiddenLayer {
                weight,
                bias: Array1::from(rec.bias),
                norm,
            });
            fan_in = width;
        }
        let weight = self.output.weight.into_array()?;
        if weight.dim() != (fan_in, self.architecture.output_classes) {
            return Err(BnnError::Checkpoint("output shape does not match architecture".into()));
        }
        let model = BnnModel {
            arch: self.architecture,
            hidden,
            output: OutputLayer {
                weight,
                bias: Array1::from(self.output.bias),
            },
            mode: self.mode,
        };
        Ok((model, self.optimizer))
    }
}

pub fn write_checkpoint(path: impl AsRef<Path>, model: &BnnModel, optimizer: Option<&OptimizerState>) -> Result<()> {
    let json = serde_json::to_string(&Checkpoint::capture(model, optimizer))
        .map_err(|e| BnnError::Checkpoint(e.to_string()))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<(BnnModel, Option<OptimizerState>)> {
    let text = fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| BnnError::Checkpoint(e.to_string()))?;
    ckpt.restore()
}

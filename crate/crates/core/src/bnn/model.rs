use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ste_backward, BnnError, Result};
use crate::pattern::{words_for, PatternBatch};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPSILON: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_classes: usize,
    /// Without batch norm the hidden layers are affine → sign.
    #[serde(default = "default_true")]
    pub batch_norm: bool,
}

fn default_true() -> bool {
    true
}

impl ArchitectureSpec {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, output_classes: usize) -> Self {
        Self {
            input_dim,
            hidden_widths,
            output_classes,
            batch_norm: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_classes == 0 || self.hidden_widths.contains(&0) {
            return Err(BnnError::InvalidArchitecture("all widths must be at least 1".into()));
        }
        if self.hidden_widths.is_empty() {
            return Err(BnnError::InvalidArchitecture(
                "at least one hidden layer is required".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Training,
    Evaluation,
}

/// How hidden pre-activations are turned into layer outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantizer {
    /// `t = 1` if `z > 0`, else `0`.
    Sign,
    /// `t = z`, differentiated exactly. Used for gradient checking.
    Identity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNorm {
    pub fn new(width: usize) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            momentum: BN_MOMENTUM,
            eps: BN_EPSILON,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenLayer {
    /// `fan_in × width`, applied as `x · W + b`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub norm: Option<BatchNorm>,
}

impl HiddenLayer {
    pub fn width(&self) -> usize {
        self.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputLayer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnnModel {
    pub(crate) arch: ArchitectureSpec,
    pub hidden: Vec<HiddenLayer>,
    pub output: OutputLayer,
    pub(crate) mode: Mode,
}

/// Per-layer values cached by [`BnnModel::forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct LayerTrace {
    /// Layer input (`N × fan_in`).
    pub input: Array2<f64>,
    /// Normalised affine output `x̂` (training-mode batch norm only).
    pub normalized: Option<Array2<f64>>,
    /// `1 / sqrt(var + eps)` of the batch (training-mode batch norm only).
    pub inv_std: Option<Array1<f64>>,
    /// Batch mean and biased variance of the affine output.
    pub batch_mean: Option<Array1<f64>>,
    pub batch_var: Option<Array1<f64>>,
    /// Pre-activations fed to the quantiser.
    pub z: Array2<f64>,
    /// Layer outputs (`{0,1}` for the sign quantiser).
    pub t: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub mode: Mode,
    pub quantizer: Quantizer,
    pub layers: Vec<LayerTrace>,
    pub logits: Array2<f64>,
}

impl ForwardTrace {
    pub fn batch_size(&self) -> usize {
        self.logits.nrows()
    }

    /// Binary activations of hidden layer `layer`, packed one row per sample.
    pub fn binary_activations(&self, layer: usize) -> PatternBatch {
        pack_rows(&self.layers[layer].z)
    }
}

/// Packs `z > 0` row by row.
pub(crate) fn pack_rows(z: &Array2<f64>) -> PatternBatch {
    let width = z.ncols();
    let mut batch = PatternBatch::with_capacity(width, z.nrows());
    let mut words = vec![0u64; words_for(width)];
    for row in z.rows() {
        words.iter_mut().for_each(|w| *w = 0);
        for (j, &v) in row.iter().enumerate() {
            if v > 0.0 {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        batch.push_words(&words);
    }
    batch
}

/// Parameter gradients, laid out like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradients {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub gamma: Option<Array1<f64>>,
    pub beta: Option<Array1<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<LayerGradients>,
    pub output_weight: Array2<f64>,
    pub output_bias: Array1<f64>,
}

impl Gradients {
    /// Flat views in the same order as [`BnnModel::parameters_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for l in &self.hidden {
            v.push(l.weight.as_slice().expect("standard layout"));
            v.push(l.bias.as_slice().expect("standard layout"));
            if let (Some(g), Some(b)) = (&l.gamma, &l.beta) {
                v.push(g.as_slice().expect("standard layout"));
                v.push(b.as_slice().expect("standard layout"));
            }
        }
        v.push(self.output_weight.as_slice().expect("standard layout"));
        v.push(self.output_bias.as_slice().expect("standard layout"));
        v
    }

    pub fn max_abs(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0f64, |m, g| m.max(g.abs()))
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (1.0 / rows as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound);
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

impl BnnModel {
    /// Weights uniform in `±sqrt(1/fan_in)`, zero biases, `γ = 1`, `β = 0`.
    pub fn new(arch: ArchitectureSpec, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fan_in = arch.input_dim;
        let mut hidden = Vec::with_capacity(arch.hidden_widths.len());
        for &width in &arch.hidden_widths {
            hidden.push(HiddenLayer {
                weight: uniform_matrix(&mut rng, fan_in, width),
                bias: Array1::zeros(width),
                norm: arch.batch_norm.then(|| BatchNorm::new(width)),
            });
            fan_in = width;
        }
        let output = OutputLayer {
            weight: uniform_matrix(&mut rng, fan_in, arch.output_classes),
            bias: Array1::zeros(arch.output_classes),
        };
        Ok(Self {
            arch,
            hidden,
            output,
            mode: Mode::Training,
        })
    }

    pub fn architecture(&self) -> &ArchitectureSpec {
        &self.arch
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn train(&mut self) {
        self.mode = Mode::Training;
    }

    pub fn eval(&mut self) {
        self.mode = Mode::Evaluation;
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.hidden.iter().map(HiddenLayer::width).collect()
    }

    /// Flat mutable views over every trainable tensor, in a fixed order:
    /// per hidden layer `W, b, γ, β`, then the output `W, b`.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.hidden {
            v.push(l.weight.as_slice_mut().expect("standard layout"));
            v.push(l.bias.as_slice_mut().expect("standard layout"));
            if let Some(n) = &mut l.norm {
                v.push(n.gamma.as_slice_mut().expect("standard layout"));
                v.push(n.beta.as_slice_mut().expect("standard layout"));
            }
        }
        v.push(self.output.weight.as_slice_mut().expect("standard layout"));
        v.push(self.output.bias.as_slice_mut().expect("standard layout"));
        v
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for l in &self.hidden {
            v.push(l.weight.as_slice().expect("standard layout"));
            v.push(l.bias.as_slice().expect("standard layout"));
            if let Some(n) = &l.norm {
                v.push(n.gamma.as_slice().expect("standard layout"));
                v.push(n.beta.as_slice().expect("standard layout"));
            }
        }
        v.push(self.output.weight.as_slice().expect("standard layout"));
        v.push(self.output.bias.as_slice().expect("standard layout"));
        v
    }

    pub fn forward(&self, inputs: ArrayView2<f64>) -> Result<ForwardTrace> {
        self.forward_with(inputs, Quantizer::Sign)
    }

    /// Affine → batch norm → quantiser per hidden layer, then an affine
    /// output layer. Training mode normalises with batch statistics,
    /// evaluation mode with the running statistics. Does not touch the
    /// running statistics; see [`BnnModel::update_running_stats`].
    pub fn forward_with(&self, inputs: ArrayView2<f64>, quantizer: Quantizer) -> Result<ForwardTrace> {
        if inputs.ncols() != self.arch.input_dim {
            return Err(BnnError::DimensionMismatch {
                expected: self.arch.input_dim,
                found: inputs.ncols(),
            });
        }
        if inputs.nrows() == 0 {
            return Err(BnnError::EmptyBatch);
        }
        if let Some(bad) = inputs.iter().find(|v| !v.is_finite()) {
            return Err(BnnError::NonFinite(*bad));
        }

        let mut layers = Vec::with_capacity(self.hidden.len());
        let mut x = inputs.to_owned();
        for layer in &self.hidden {
            let a = x.dot(&layer.weight) + &layer.bias;
            let mut lt = LayerTrace {
                input: x,
                normalized: None,
                inv_std: None,
                batch_mean: None,
                batch_var: None,
                z: Array2::zeros((0, 0)),
                t: Array2::zeros((0, 0)),
            };
            let z = match (&layer.norm, self.mode) {
                (None, _) => a,
                (Some(bn), Mode::Evaluation) => {
                    let scale = &bn.gamma / &bn.running_var.mapv(|v| (v + bn.eps).sqrt());
                    let shift = &bn.beta - &(&bn.running_mean * &scale);
                    a * &scale + &shift
                }
                (Some(bn), Mode::Training) => {
                    let n = a.nrows() as f64;
                    let mean = a.sum_axis(Axis(0)) / n;
                    let centered = &a - &mean;
                    let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / n;
                    let inv_std = var.mapv(|v| 1.0 / (v + bn.eps).sqrt());
                    let xhat = centered * &inv_std;
                    let z = &xhat * &bn.gamma + &bn.beta;
                    lt.normalized = Some(xhat);
                    lt.inv_std = Some(inv_std);
                    lt.batch_mean = Some(mean);
                    lt.batch_var = Some(var);
                    z
                }
            };
            let t = match quantizer {
                Quantizer::Sign => z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }),
                Quantizer::Identity => z.clone(),
            };
            lt.z = z;
            x = t.clone();
            lt.t = t;
            layers.push(lt);
        }
        let logits = x.dot(&self.output.weight) + &self.output.bias;
        Ok(ForwardTrace {
            mode: self.mode,
            quantizer,
            layers,
            logits,
        })
    }

    /// Folds the batch statistics of a training-mode trace into the running
    /// mean and (unbiased) variance.
    pub fn update_running_stats(&mut self, trace: &ForwardTrace) {
        let n = trace.batch_size() as f64;
        for (layer, lt) in self.hidden.iter_mut().zip(&trace.layers) {
            let (Some(bn), Some(mean), Some(var)) = (&mut layer.norm, &lt.batch_mean, &lt.batch_var) else {
                continue;
            };
            let unbiased = if n > 1.0 { var * (n / (n - 1.0)) } else { var.clone() };
            let m = bn.momentum;
            bn.running_mean = &bn.running_mean * (1.0 - m) + mean * m;
            bn.running_var = &bn.running_var * (1.0 - m) + &unbiased * m;
        }
    }

    /// Gradients of the mean softmax cross-entropy.
    pub fn backward(&self, trace: &ForwardTrace, labels: &[usize]) -> Result<Gradients> {
        let (_, dlogits) = softmax_cross_entropy(&trace.logits, labels)?;
        self.backward_from_logits(trace, &dlogits)
    }

    /// Back-propagates a given loss gradient with respect to the logits.
    pub fn backward_from_logits(&self, trace: &ForwardTrace, dlogits: &Array2<f64>) -> Result<Gradients> {
        if trace.mode != Mode::Training || self.mode != Mode::Training {
            return Err(BnnError::ModeMismatch {
                expected: Mode::Training,
                found: trace.mode,
            });
        }
        if trace.layers.len() != self.hidden.len() || dlogits.dim() != trace.logits.dim() {
            return Err(BnnError::DimensionMismatch {
                expected: trace.logits.ncols(),
                found: dlogits.ncols(),
            });
        }

        let last_t = &trace.layers.last().expect("at least one hidden layer").t;
        let output_weight = last_t.t().dot(dlogits);
        let output_bias = dlogits.sum_axis(Axis(0));
        let mut upstream = dlogits.dot(&self.output.weight.t());

        let mut hidden = Vec::with_capacity(self.hidden.len());
        for (idx, (layer, lt)) in self.hidden.iter().zip(&trace.layers).enumerate().rev() {
            let mut dz = upstream;
            if trace.quantizer == Quantizer::Sign {
                ndarray::Zip::from(&mut dz)
                    .and(&lt.z)
                    .for_each(|g, &z| *g = ste_backward(z, *g));
            }

            let (da, gamma, beta) = match (&layer.norm, &lt.normalized, &lt.inv_std) {
                (Some(bn), Some(xhat), Some(inv_std)) => {
                    let dgamma = (&dz * xhat).sum_axis(Axis(0));
                    let dbeta = dz.sum_axis(Axis(0));
                    let dxhat = &dz * &bn.gamma;
                    let n = dz.nrows() as f64;
                    let sum_dxhat = dxhat.sum_axis(Axis(0));
                    let sum_dxhat_xhat = (&dxhat * xhat).sum_axis(Axis(0));
                    let da = (&dxhat * n - &sum_dxhat - xhat * &sum_dxhat_xhat) * &(inv_std / n);
                    (da, Some(dgamma), Some(dbeta))
                }
                (None, _, _) => (dz, None, None),
                (Some(_), _, _) => return Err(BnnError::MissingBatchStatistics),
            };

            let weight = lt.input.t().dot(&da);
            let bias = da.sum_axis(Axis(0));
            upstream = if idx > 0 {
                da.dot(&layer.weight.t())
            } else {
                Array2::zeros((0, 0))
            };
            hidden.push(LayerGradients {
                weight,
                bias,
                gamma,
                beta,
            });
        }
        hidden.reverse();
        Ok(Gradients {
            hidden,
            output_weight,
            output_bias,
        })
    }

    /// Logits of an evaluation-mode forward pass, processed in chunks.
    pub fn predict_logits(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.require_eval()?;
        let mut out = Array2::zeros((inputs.nrows(), self.arch.output_classes));
        for start in (0..inputs.nrows()).step_by(EVAL_CHUNK) {
            let end = (start + EVAL_CHUNK).min(inputs.nrows());
            let trace = self.forward(inputs.slice(s![start..end, ..]))?;
            out.slice_mut(s![start..end, ..]).assign(&trace.logits);
        }
        Ok(out)
    }

    pub(crate) fn require_eval(&self) -> Result<()> {
        if self.mode != Mode::Evaluation {
            return Err(BnnError::ModeMismatch {
                expected: Mode::Evaluation,
                found: self.mode,
            });
        }
        Ok(())
    }
}

pub(crate) const EVAL_CHUNK: usize = 2048;

/// Mean cross-entropy of `softmax(logits)` and its gradient w.r.t. the logits.
pub fn softmax_cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (n, c) = logits.dim();
    if labels.len() != n {
        return Err(BnnError::LabelCount {
            samples: n,
            labels: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(BnnError::LabelOutOfRange { label: bad, classes: c });
    }
    let mut grad = Array2::zeros((n, c));
    let mut loss = 0.0;
    for (i, (row, &y)) in logits.rows().into_iter().zip(labels).enumerate() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let sum: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[y];
        for j in 0..c {
            grad[[i, j]] = (row[j] - log_z).exp() / n as f64;
        }
        grad[[i, y]] -= 1.0 / n as f64;
    }
    Ok((loss / n as f64, grad))
}

/// Index of the largest entry per row, lowest index on ties.
pub fn argmax_rows(logits: &Array2<f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

use ndarray::{s, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{argmax_rows, pack_rows, softmax_cross_entropy, EVAL_CHUNK};
use super::{BnnError, BnnModel, OptimizerState, Result};
use crate::data::LabeledDataset;
use crate::pattern::PatternBatch;

/// Forward, backward and one optimiser update on a single batch. Returns the
/// mean loss of the batch before the update.
pub fn train_step(
    model: &mut BnnModel,
    optimizer: &mut OptimizerState,
    inputs: ArrayView2<f64>,
    labels: &[usize],
) -> Result<f64> {
    model.train();
    let trace = model.forward(inputs)?;
    let (loss, dlogits) = softmax_cross_entropy(&trace.logits, labels)?;
    let grads = model.backward_from_logits(&trace, &dlogits)?;
    model.update_running_stats(&trace);
    optimizer.step(model, &grads)?;
    Ok(loss)
}

/// One pass over `dataset` in mini-batches, shuffled by a stream derived
/// from `(seed, epoch)`. Returns the mean per-sample training loss.
pub fn train_epoch(
    model: &mut BnnModel,
    optimizer: &mut OptimizerState,
    dataset: &LabeledDataset,
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> Result<f64> {
    let n = dataset.len();
    if n == 0 {
        return Err(BnnError::EmptyBatch);
    }
    let batch_size = batch_size.max(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    order.shuffle(&mut rng);

    let mut total = 0.0;
    for chunk in order.chunks(batch_size) {
        let x = dataset.inputs.select(Axis(0), chunk);
        let y: Vec<usize> = chunk.iter().map(|&i| dataset.labels[i]).collect();
        total += train_step(model, optimizer, x.view(), &y)? * chunk.len() as f64;
    }
    Ok(total / n as f64)
}

/// Binary activations of every hidden layer, one batch per layer. Requires
/// evaluation mode so batch statistics never leak into the patterns.
pub fn extract_binary_activations(model: &BnnModel, inputs: ArrayView2<f64>) -> Result<Vec<PatternBatch>> {
    model.require_eval()?;
    let mut out: Vec<PatternBatch> = model
        .hidden_widths()
        .into_iter()
        .map(|w| PatternBatch::with_capacity(w, inputs.nrows()))
        .collect();
    for start in (0..inputs.nrows()).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(inputs.nrows());
        let trace = model.forward(inputs.slice(s![start..end, ..]))?;
        for (batch, layer) in out.iter_mut().zip(&trace.layers) {
            for row in pack_rows(&layer.z).rows() {
                batch.push_words(row);
            }
        }
    }
    Ok(out)
}

/// Percentage of samples whose arg-max logit equals the label.
pub fn evaluate_accuracy(model: &BnnModel, dataset: &LabeledDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(BnnError::EmptyBatch);
    }
    let logits = model.predict_logits(dataset.inputs.view())?;
    Ok(accuracy_of(&argmax_rows(&logits), &dataset.labels))
}

pub(crate) fn accuracy_of(predicted: &[usize], labels: &[usize]) -> f64 {
    let correct = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    100.0 * correct as f64 / labels.len() as f64
}

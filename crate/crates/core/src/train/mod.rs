//! Low-precision training of small sequential networks.
//!
//! Five number categories are quantized independently: weights, gradients
//! and accumulators inside [`LowPrecisionOptimizer`], activations and errors
//! by quantizer layers that [`inject_quantizers`] places into the model.
//! The loss is softmax cross-entropy in full precision.

mod data;
mod model;
mod optim;

use alloc::vec::Vec;

pub use data::Dataset;
pub use model::{inject_quantizers, ForwardCache, Gradients, Layer, Linear, LinearGrad, Model};
pub use optim::LowPrecisionOptimizer;

use crate::error::{Error, Result};
use crate::quant::QuantSpec;
use crate::rng::RngStream;
use crate::tensor::Tensor;

/// Per-category quantization. An absent category stays in full precision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuantConfig {
    pub weight: Option<QuantSpec>,
    pub accumulator: Option<QuantSpec>,
    pub gradient: Option<QuantSpec>,
    pub activation: Option<QuantSpec>,
    pub error: Option<QuantSpec>,
}

impl QuantConfig {
    /// The same spec for all five categories.
    pub fn uniform(spec: QuantSpec) -> Self {
        Self {
            weight: Some(spec),
            accumulator: Some(spec),
            gradient: Some(spec),
            activation: Some(spec),
            error: Some(spec),
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f32, Tensor)> {
    let shape = logits.shape();
    if shape.len() != 2 || shape[0] != labels.len() {
        return Err(Error::ShapeMismatch { op: "softmax_cross_entropy", left: shape.to_vec(), right: alloc::vec![labels.len()] });
    }
    let (batch, classes) = (shape[0], shape[1]);
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidArgument(alloc::format!("label {bad} out of range for {classes} classes")));
    }
    let probs = logits.softmax_rows()?;
    let scale = 1.0 / batch.max(1) as f32;
    let mut loss = 0.0f32;
    let mut grad = probs.into_data();
    for (row, &label) in grad.chunks_exact_mut(classes.max(1)).zip(labels) {
        loss -= libm::logf(row[label].max(f32::MIN_POSITIVE));
        row[label] -= 1.0;
        for g in row.iter_mut() {
            *g *= scale;
        }
    }
    Ok((loss * scale, Tensor::new(shape.to_vec(), grad)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f32,
    pub momentum: f32,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { epochs: 30, learning_rate: 0.05, momentum: 0.9, batch_size: 32, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean training loss over the epoch's minibatches.
    pub loss: f32,
    /// Training-set accuracy measured after the epoch.
    pub accuracy: f32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub epochs: Vec<EpochMetrics>,
}

impl TrainTrace {
    pub fn final_accuracy(&self) -> Option<f32> {
        self.epochs.last().map(|m| m.accuracy)
    }
}

/// Fraction of rows whose arg-max logit matches the label.
pub fn accuracy(model: &mut Model, data: &Dataset) -> Result<f32> {
    let (logits, _) = model.forward(&data.features)?;
    let predicted = logits.argmax_rows()?;
    let correct = predicted.iter().zip(&data.labels).filter(|(p, l)| p == l).count();
    Ok(correct as f32 / data.len().max(1) as f32)
}

/// Trains `model` (which must not contain quantizer layers) with minibatch
/// SGD under `cfg`. Quantizers are injected first and the optimizer owns the
/// master weights. Fully determined by its arguments; zero epochs returns
/// the model untouched and an empty trace.
pub fn train(model: Model, data: &Dataset, cfg: &QuantConfig, opts: &TrainOptions) -> Result<(Model, TrainTrace)> {
    if opts.epochs == 0 {
        return Ok((model, TrainTrace::default()));
    }
    if opts.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("dataset is empty".into()));
    }
    let mut model = inject_quantizers(model, cfg)?;
    let mut opt = LowPrecisionOptimizer::new(&mut model, opts.learning_rate, opts.momentum, cfg)?;
    let shuffle = RngStream::new(opts.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = TrainTrace::default();
    for epoch in 0..opts.epochs {
        // Fisher-Yates with one stream per epoch.
        for i in (1..order.len()).rev() {
            let j = (shuffle.bits(epoch as u64, i as u64) % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        let mut loss_sum = 0.0f64;
        let mut batches = 0usize;
        for chunk in order.chunks(opts.batch_size) {
            let (x, y) = data.batch(chunk);
            let (logits, cache) = model.forward(&x)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &y)?;
            let grads = model.backward(&cache, &grad)?;
            opt.step(&mut model, &grads)?;
            loss_sum += loss as f64;
            batches += 1;
        }
        let accuracy = accuracy(&mut model, data)?;
        trace.epochs.push(EpochMetrics { epoch, loss: (loss_sum / batches as f64) as f32, accuracy });
    }
    Ok((model, trace))
}

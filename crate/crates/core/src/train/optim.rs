use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::quant::QuantSpec;
use crate::tensor::Tensor;

use super::model::{derive_spec, Gradients, Model};
use super::QuantConfig;

/// SGD with momentum that keeps a master copy of every parameter at
/// accumulator precision.
///
/// Each step quantizes the gradient, updates the momentum buffer and the
/// master copy (both re-quantized by the accumulator spec), then sets the
/// live weights to the weight-quantized master copy. With every spec absent
/// this is plain SGD with momentum.
#[derive(Debug, Clone)]
pub struct LowPrecisionOptimizer {
    learning_rate: f32,
    momentum: f32,
    weight: Vec<Option<QuantSpec>>,
    gradient: Vec<Option<QuantSpec>>,
    accumulator: Vec<Option<QuantSpec>>,
    accumulators: Vec<Tensor>,
    velocity: Vec<Option<Tensor>>,
    last_gradients: Vec<Tensor>,
}

fn quantize(spec: &mut Option<QuantSpec>, t: Tensor) -> Result<Tensor> {
    match spec {
        Some(s) => s.apply(&t),
        None => Ok(t),
    }
}

impl LowPrecisionOptimizer {
    /// Takes the master copy from the model, quantized to accumulator
    /// precision, and resets the live weights to its weight-quantized value.
    pub fn new(model: &mut Model, learning_rate: f32, momentum: f32, cfg: &QuantConfig) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate >= 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("learning rate {learning_rate} must be finite and >= 0")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidArgument(alloc::format!("momentum {momentum} must be in [0, 1)")));
        }
        let n = model.parameters().len();
        // Offsets keep the optimizer's streams apart from the injected layers'.
        let specs = |spec: &Option<QuantSpec>, base: u64| -> Vec<Option<QuantSpec>> {
            (0..n as u64).map(|i| derive_spec(spec, base + i)).collect()
        };
        let mut opt = Self {
            learning_rate,
            momentum,
            weight: specs(&cfg.weight, 1 << 20),
            gradient: specs(&cfg.gradient, 2 << 20),
            accumulator: specs(&cfg.accumulator, 3 << 20),
            accumulators: Vec::with_capacity(n),
            velocity: (0..n).map(|_| None).collect(),
            last_gradients: Vec::new(),
        };
        let mut live = Vec::with_capacity(n);
        for (i, p) in model.parameters().into_iter().enumerate() {
            let acc = quantize(&mut opt.accumulator[i], p.clone())?;
            live.push(quantize(&mut opt.weight[i], acc.clone())?);
            opt.accumulators.push(acc);
        }
        if cfg.weight.is_some() || cfg.accumulator.is_some() {
            model.set_parameters(live)?;
        }
        Ok(opt)
    }

    pub fn learning_rate(&self) -> f32 {
        self.learning_rate
    }

    pub fn momentum(&self) -> f32 {
        self.momentum
    }

    /// Master copies, in [`Model::parameters`] order.
    pub fn accumulators(&self) -> &[Tensor] {
        &self.accumulators
    }

    /// Momentum buffers (absent before the first step or with zero momentum).
    pub fn velocities(&self) -> impl Iterator<Item = &Tensor> {
        self.velocity.iter().flatten()
    }

    /// Gradients after gradient quantization in the most recent step.
    pub fn last_gradients(&self) -> &[Tensor] {
        &self.last_gradients
    }

    pub fn step(&mut self, model: &mut Model, grads: &Gradients) -> Result<()> {
        let flat: Vec<&Tensor> = grads.linear.iter().flat_map(|g| [&g.weight, &g.bias]).collect();
        if flat.len() != self.accumulators.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} gradients for {} parameters",
                flat.len(),
                self.accumulators.len()
            )));
        }
        let mut live = Vec::with_capacity(flat.len());
        let mut quantized_grads = Vec::with_capacity(flat.len());
        for (i, g) in flat.into_iter().enumerate() {
            if g.shape() != self.accumulators[i].shape() {
                return Err(Error::ShapeMismatch {
                    op: "step",
                    left: self.accumulators[i].shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
            let g = quantize(&mut self.gradient[i], g.clone())?;
            let update = if self.momentum > 0.0 {
                let v = match self.velocity[i].take() {
                    Some(v) => v.scale(self.momentum).add(&g)?,
                    None => g.clone(),
                };
                let v = quantize(&mut self.accumulator[i], v)?;
                self.velocity[i] = Some(v.clone());
                v
            } else {
                g.clone()
            };
            let acc = self.accumulators[i].sub(&update.scale(self.learning_rate))?;
            let acc = quantize(&mut self.accumulator[i], acc)?;
            live.push(quantize(&mut self.weight[i], acc.clone())?);
            self.accumulators[i] = acc;
            quantized_grads.push(g);
        }
        self.last_gradients = quantized_grads;
        model.set_parameters(live)
    }
}

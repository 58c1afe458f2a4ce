use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::quant::QuantSpec;
use crate::rng::RngStream;
use crate::tensor::Tensor;

use super::QuantConfig;

/// Affine layer `y = x W^T + b` with `W` of shape `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    pub fn new(weight: Tensor, bias: Tensor) -> Result<Self> {
        if weight.rank() != 2 || bias.shape() != [weight.shape()[0]] {
            return Err(Error::ShapeMismatch {
                op: "linear",
                left: weight.shape().to_vec(),
                right: bias.shape().to_vec(),
            });
        }
        Ok(Self { weight, bias })
    }

    /// Uniform init in `±1/sqrt(in)`, zero bias.
    pub fn init(inputs: usize, outputs: usize, stream: RngStream, call: u64) -> Self {
        let bound = 1.0 / libm::sqrtf(inputs.max(1) as f32);
        let w = Tensor::uniform(&[outputs, inputs], stream, call).data().iter().map(|u| (2.0 * u - 1.0) * bound).collect();
        Self {
            weight: Tensor::new(vec![outputs, inputs], w).expect("finite init"),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[0]
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.matmul(&self.weight.transpose()?)?;
        add_bias(y, &self.bias)
    }
}

fn add_bias(y: Tensor, bias: &Tensor) -> Result<Tensor> {
    let shape = y.shape().to_vec();
    let cols = bias.len();
    if shape.len() != 2 || shape[1] != cols {
        return Err(Error::ShapeMismatch { op: "add_bias", left: shape, right: bias.shape().to_vec() });
    }
    let mut data = y.into_data();
    for row in data.chunks_exact_mut(cols.max(1)) {
        for (v, b) in row.iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
    Tensor::new(shape, data)
}

/// One stage of a sequential model. Quantizer layers are shape-preserving;
/// a `None` spec is a no-op marker left by injection of an absent category.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Linear(Linear),
    Relu,
    /// Quantizes the forward signal; identity (straight-through) backward.
    ActivationQuant(Option<QuantSpec>),
    /// Identity forward; quantizes the backward error signal.
    ErrorQuant(Option<QuantSpec>),
}

impl Layer {
    pub fn is_quantizer(&self) -> bool {
        matches!(self, Layer::ActivationQuant(_) | Layer::ErrorQuant(_))
    }
}

/// A sequential network.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    layers: Vec<Layer>,
    /// Bumped on every parameter update so stale caches are detected.
    generation: u64,
}

/// Inputs seen by each layer during a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Tensor>,
    generation: u64,
}

impl ForwardCache {
    /// Input of layer `i`; after an `ActivationQuant` this is the quantized activation.
    pub fn input(&self, i: usize) -> &Tensor {
        &self.inputs[i]
    }

    pub fn inputs(&self) -> &[Tensor] {
        &self.inputs
    }
}

/// Parameter gradients of one linear layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrad {
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    /// One entry per linear layer, in layer order. Unquantized.
    pub linear: Vec<LinearGrad>,
    /// Backward signals emitted by each `ErrorQuant` layer (quantized when a spec is set).
    pub errors: Vec<Tensor>,
}

impl Model {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let mut width: Option<usize> = None;
        for layer in &layers {
            if let Layer::Linear(l) = layer {
                if let Some(w) = width {
                    if w != l.inputs() {
                        return Err(Error::ShapeMismatch {
                            op: "model",
                            left: vec![w],
                            right: l.weight.shape().to_vec(),
                        });
                    }
                }
                width = Some(l.outputs());
            }
        }
        Ok(Self { layers, generation: 0 })
    }

    /// Multi-layer perceptron `Linear, ReLU, Linear, ..., Linear` over `sizes`.
    pub fn mlp(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidArgument("an MLP needs at least input and output sizes".into()));
        }
        let stream = RngStream::new(seed);
        let mut layers = Vec::new();
        for (i, pair) in sizes.windows(2).enumerate() {
            if i > 0 {
                layers.push(Layer::Relu);
            }
            layers.push(Layer::Linear(Linear::init(pair[0], pair[1], stream, i as u64)));
        }
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn has_quantizers(&self) -> bool {
        self.layers.iter().any(Layer::is_quantizer)
    }

    pub fn linears(&self) -> impl Iterator<Item = &Linear> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Linear(l) => Some(l),
            _ => None,
        })
    }

    /// Parameters in the order `W0, b0, W1, b1, ...`.
    pub fn parameters(&self) -> Vec<&Tensor> {
        self.linears().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub(crate) fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.generation += 1;
        self.layers
            .iter_mut()
            .filter_map(|l| match l {
                Layer::Linear(l) => Some(l),
                _ => None,
            })
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    /// Replaces every parameter, in [`Model::parameters`] order.
    pub fn set_parameters(&mut self, values: Vec<Tensor>) -> Result<()> {
        let current = self.parameters();
        if current.len() != values.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} parameter tensors for {} parameters",
                values.len(),
                current.len()
            )));
        }
        if let Some((p, v)) = current.iter().zip(&values).find(|(p, v)| p.shape() != v.shape()) {
            return Err(Error::ShapeMismatch { op: "set_parameters", left: p.shape().to_vec(), right: v.shape().to_vec() });
        }
        for (p, v) in self.parameters_mut().into_iter().zip(values) {
            *p = v;
        }
        Ok(())
    }

    /// Runs the network on a `batch x in` input. Activation quantizers
    /// advance their call counters.
    pub fn forward(&mut self, x: &Tensor) -> Result<(Tensor, ForwardCache)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &mut self.layers {
            let next = match layer {
                Layer::Linear(l) => l.forward(&h)?,
                Layer::Relu => h.relu(),
                Layer::ActivationQuant(Some(spec)) => spec.apply(&h)?,
                Layer::ActivationQuant(None) | Layer::ErrorQuant(_) => h.clone(),
            };
            inputs.push(core::mem::replace(&mut h, next));
        }
        Ok((h, ForwardCache { inputs, generation: self.generation }))
    }

    /// Reverse pass from the loss gradient with respect to the output.
    pub fn backward(&mut self, cache: &ForwardCache, loss_grad: &Tensor) -> Result<Gradients> {
        if cache.generation != self.generation || cache.inputs.len() != self.layers.len() {
            return Err(Error::StaleCache);
        }
        let mut linear = Vec::new();
        let mut errors = Vec::new();
        let mut g = loss_grad.clone();
        for (layer, x) in self.layers.iter_mut().zip(&cache.inputs).rev() {
            g = match layer {
                Layer::Linear(l) => {
                    let weight = g.transpose()?.matmul(x)?;
                    let bias = g.sum_rows()?;
                    let prev = g.matmul(&l.weight)?;
                    linear.push(LinearGrad { weight, bias });
                    prev
                }
                Layer::Relu => x.relu_backward(&g)?,
                Layer::ActivationQuant(_) => g,
                Layer::ErrorQuant(spec) => {
                    let q = match spec {
                        Some(spec) => spec.apply(&g)?,
                        None => g,
                    };
                    errors.push(q.clone());
                    q
                }
            };
        }
        linear.reverse();
        errors.reverse();
        Ok(Gradients { linear, errors })
    }
}

/// Per-position seed so each injected quantizer draws an independent stream.
pub(crate) fn derive_spec(spec: &Option<QuantSpec>, position: u64) -> Option<QuantSpec> {
    spec.map(|s| QuantSpec {
        seed: RngStream::new(s.seed).bits(u64::MAX, position),
        ..s
    })
}

/// Inserts an `ErrorQuant` after every linear layer and an `ActivationQuant`
/// after every nonlinearity, or after a linear layer no nonlinearity follows.
/// Absent categories leave no-op markers. Fails on a model that already has
/// quantizer layers.
pub fn inject_quantizers(model: Model, cfg: &QuantConfig) -> Result<Model> {
    if model.has_quantizers() {
        return Err(Error::DoubleInjection);
    }
    let Model { layers, generation } = model;
    let mut out = Vec::with_capacity(layers.len() * 2);
    let mut position = 0u64;
    let n = layers.len();
    let followed_by_relu: Vec<bool> = (0..n).map(|i| matches!(layers.get(i + 1), Some(Layer::Relu))).collect();
    for (i, layer) in layers.into_iter().enumerate() {
        let is_linear = matches!(layer, Layer::Linear(_));
        let is_relu = matches!(layer, Layer::Relu);
        out.push(layer);
        if is_linear {
            out.push(Layer::ErrorQuant(derive_spec(&cfg.error, position)));
            position += 1;
        }
        if is_relu || (is_linear && !followed_by_relu[i]) {
            out.push(Layer::ActivationQuant(derive_spec(&cfg.activation, position)));
            position += 1;
        }
    }
    Ok(Model { layers: out, generation })
}

//! Tensor quantization: a fused kernel and a composed multi-pass baseline.
//!
//! The fused kernel makes at most two passes over the data: one reduction
//! for block maxima when the format needs it, then a single pass that
//! scales, rounds, saturates and rescales each element. The composed
//! baseline chains generic [`Tensor`] operations, each with its own pass and
//! temporary. Both draw the variate for flat index `i` from
//! `uniform(seed, call_counter, i)` and produce bit-identical results.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::format::{BlockAssignment, NumberFormat};
use crate::rng::{uniform_for_key, RngStream};
use crate::rounding::RoundingMode;
use crate::scalar::{block_kernel, fixed_saturating_kernel, fixed_wrapping_kernel, float_kernel, BlockParams, FixedParams, FloatParams};
use crate::tensor::{record_pass, BlockLayout, Tensor};

/// A format, a rounding mode and the RNG position for stochastic rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantSpec {
    pub format: NumberFormat,
    pub mode: RoundingMode,
    pub seed: u64,
    /// Index of the next stochastic call; advanced by [`QuantSpec::apply`].
    pub call_counter: u64,
}

impl QuantSpec {
    pub fn new(format: impl Into<NumberFormat>, mode: RoundingMode, seed: u64) -> Self {
        Self { format: format.into(), mode, seed, call_counter: 0 }
    }

    pub fn stream(&self) -> RngStream {
        RngStream::new(self.seed)
    }

    /// Moves to the next call; only stochastic specs consume counters.
    pub fn advance(&mut self) {
        if self.mode.is_stochastic() {
            self.call_counter += 1;
        }
    }

    /// Quantizes with the fused kernel and advances the call counter.
    pub fn apply(&mut self, t: &Tensor) -> Result<Tensor> {
        let out = quantize_fused(t, self)?;
        self.advance();
        Ok(out)
    }
}

#[derive(Debug, Clone)]
enum Plan {
    /// Single precision: only zero and normal values are already on the grid.
    Identity(FloatParams),
    Float(FloatParams),
    Fixed(FixedParams),
    Block { layout: BlockLayout, params: Vec<BlockParams> },
}

/// A quantization kernel bound to one tensor: block maxima are already
/// reduced, so [`FusedKernel::apply`] can process any sub-range of the data
/// independently (and in parallel) with identical results.
#[derive(Debug, Clone)]
pub struct FusedKernel {
    plan: Plan,
    mode: RoundingMode,
    key: u64,
}

impl FusedKernel {
    /// Validates `t` against `spec` and runs the block-maximum reduction if
    /// the format needs one.
    pub fn prepare(t: &Tensor, spec: &QuantSpec) -> Result<Self> {
        let plan = match &spec.format {
            NumberFormat::Float(f) if f.is_identity() => Plan::Identity(f.into()),
            NumberFormat::Float(f) => Plan::Float(f.into()),
            NumberFormat::Fixed(f) => Plan::Fixed(f.into()),
            NumberFormat::Block(b) => {
                let layout = BlockLayout::new(t.shape(), b.block())?;
                record_pass();
                // Magnitude bit patterns order like the magnitudes, and any
                // NaN or infinity sorts above every finite value, so one
                // integer max finds both the block maximum and bad input.
                let mut maxima = vec![0u32; layout.blocks];
                layout.for_each_run(t.data(), |blk, _, run| maxima[blk] = maxima[blk].max(max_magnitude_bits(run)));
                if maxima.iter().any(|&m| m >= 0x7f80_0000) {
                    return Err(first_non_finite(t.data()));
                }
                Plan::Block { layout, params: maxima.iter().map(|&m| BlockParams::new(f32::from_bits(m), b)).collect() }
            }
        };
        Ok(Self { plan, mode: spec.mode, key: spec.stream().call_key(spec.call_counter) })
    }

    /// Quantizes `src` into `dst`; `offset` is the flat index of `src[0]`
    /// in the whole tensor. Does not record a pass.
    pub fn apply(&self, src: &[f32], dst: &mut [f32], offset: usize) -> Result<()> {
        assert_eq!(src.len(), dst.len(), "fused kernel source and destination differ in length");
        let finite = match &self.plan {
            Plan::Identity(p) => self.run(src, dst, offset, |x, mode, u| {
                // One compare flags subnormals; zeros (common after ReLU) and
                // normals take the same, well-predicted path.
                let magnitude = x.to_bits() & 0x7fff_ffff;
                if magnitude.wrapping_sub(1) < 0x007f_ffff {
                    float_kernel(x, p, mode, u)
                } else {
                    x
                }
            }),
            Plan::Float(p) => self.run(src, dst, offset, |x, mode, u| float_kernel(x, p, mode, u)),
            Plan::Fixed(p) if p.saturate => self.run(src, dst, offset, |x, mode, u| fixed_saturating_kernel(x, p, mode, u)),
            Plan::Fixed(p) => self.run(src, dst, offset, |x, mode, u| fixed_wrapping_kernel(x, p, mode, u)),
            Plan::Block { layout, params } => {
                if let [p] = params[..] {
                    self.run(src, dst, offset, |x, mode, u| block_kernel(x, &p, mode, u))
                } else {
                    let mut finite = true;
                    let mut start = 0;
                    while start < src.len() {
                        let idx = offset + start;
                        let end = ((idx / layout.inner + 1) * layout.inner - offset).min(src.len());
                        let p = &params[layout.block_of(idx)];
                        finite &= self.run(&src[start..end], &mut dst[start..end], idx, |x, mode, u| {
                            block_kernel(x, p, mode, u)
                        });
                        start = end;
                    }
                    finite
                }
            }
        };
        if finite {
            Ok(())
        } else {
            Err(first_non_finite(src))
        }
    }

    /// Dispatches on the rounding mode once, so each loop body is compiled
    /// with a constant mode and no per-element branching on it.
    #[inline(always)]
    fn run(&self, src: &[f32], dst: &mut [f32], offset: usize, f: impl Fn(f32, RoundingMode, f32) -> f32) -> bool {
        match self.mode {
            RoundingMode::Stochastic => {
                let key = self.key;
                let mut finite = true;
                for (i, (d, &x)) in dst.iter_mut().zip(src).enumerate() {
                    finite &= x.is_finite();
                    *d = f(x, RoundingMode::Stochastic, uniform_for_key(key, (offset + i) as u64));
                }
                finite
            }
            RoundingMode::NearestEven => nearest(src, dst, |x| f(x, RoundingMode::NearestEven, 0.0)),
            RoundingMode::NearestAway => nearest(src, dst, |x| f(x, RoundingMode::NearestAway, 0.0)),
            RoundingMode::NearestTowardZero => nearest(src, dst, |x| f(x, RoundingMode::NearestTowardZero, 0.0)),
        }
    }
}

#[inline(always)]
fn nearest(src: &[f32], dst: &mut [f32], f: impl Fn(f32) -> f32) -> bool {
    let mut finite = true;
    for (d, &x) in dst.iter_mut().zip(src) {
        finite &= x.is_finite();
        *d = f(x);
    }
    finite
}

/// Largest `|x|` bit pattern, in eight independent lanes so the loop
/// vectorizes.
fn max_magnitude_bits(run: &[f32]) -> u32 {
    let mut lanes = [0u32; 8];
    let chunks = run.chunks_exact(8);
    let tail = chunks.remainder().iter().fold(0, |m, x| m.max(x.to_bits() & 0x7fff_ffff));
    for chunk in chunks {
        let chunk: &[f32; 8] = chunk.try_into().expect("exact chunk");
        for j in 0..8 {
            lanes[j] = lanes[j].max(chunk[j].to_bits() & 0x7fff_ffff);
        }
    }
    lanes.into_iter().fold(tail, u32::max)
}

fn first_non_finite(data: &[f32]) -> Error {
    let value = data.iter().copied().find(|x| !x.is_finite()).unwrap_or(f32::NAN);
    Error::NonFinite { value }
}

/// Quantizes every element of `t` in at most two data passes. Does not
/// advance the call counter; see [`QuantSpec::apply`].
pub fn quantize_fused(t: &Tensor, spec: &QuantSpec) -> Result<Tensor> {
    let kernel = FusedKernel::prepare(t, spec)?;
    let mut out = vec![0.0f32; t.len()];
    record_pass();
    kernel.apply(t.data(), &mut out, 0)?;
    Ok(Tensor::from_parts(t.shape().to_vec(), out))
}

/// The same quantization expressed as a chain of generic tensor operations.
/// Floating-point formats are rejected: without exponent manipulation the
/// chain cannot express them.
pub fn quantize_composed(t: &Tensor, spec: &QuantSpec) -> Result<Tensor> {
    let variates = |shape: &[usize]| {
        spec.mode.is_stochastic().then(|| Tensor::uniform(shape, spec.stream(), spec.call_counter))
    };
    match &spec.format {
        NumberFormat::Float(_) => Err(Error::UnsupportedFormat(
            "the composed baseline cannot simulate low-precision floating point",
        )),
        NumberFormat::Fixed(f) => {
            let scaled = t.scale(f.inv_step());
            let u = variates(t.shape());
            let k = scaled.round(spec.mode, u.as_ref())?;
            let k = if f.saturate() {
                k.clamp(f.k_min() as f32, f.k_max() as f32)
            } else {
                k.wrap(f.wl())
            };
            Ok(k.scale(f.step()))
        }
        NumberFormat::Block(b) => {
            let block = b.block();
            let maxima = t.abs().reduce_max_abs(block)?;
            let steps = Tensor::expand_blocks(&maxima.block_steps(b), t.shape(), block)?;
            let scaled = t.div(&steps)?;
            let u = variates(t.shape());
            let k = scaled.round(spec.mode, u.as_ref())?.clamp(b.k_min() as f32, b.k_max() as f32);
            k.mul(&steps)
        }
    }
}

/// A full-precision operation followed by fused quantization of its output.
/// The operation's internals (e.g. matmul accumulation) stay in single
/// precision.
#[derive(Debug, Clone)]
pub struct QuantizedOp<F> {
    op: F,
    spec: QuantSpec,
}

pub fn quantized_op<F>(op: F, spec: QuantSpec) -> QuantizedOp<F> {
    QuantizedOp { op, spec }
}

impl<F> QuantizedOp<F> {
    pub fn spec(&self) -> &QuantSpec {
        &self.spec
    }

    pub fn call<A>(&mut self, args: A) -> Result<Tensor>
    where
        F: FnMut(A) -> Result<Tensor>,
    {
        let y = (self.op)(args)?;
        self.spec.apply(&y)
    }
}

/// Block exponent of each block (`None` for all-zero blocks), for membership
/// checks against the enumerated representable set.
pub fn block_exponents(t: &Tensor, block: BlockAssignment) -> Result<Vec<Option<i32>>> {
    let maxima = t.reduce_max_abs(block)?;
    Ok(maxima
        .data()
        .iter()
        .map(|&m| (m != 0.0).then(|| crate::scalar::floor_log2(m)))
        .collect())
}

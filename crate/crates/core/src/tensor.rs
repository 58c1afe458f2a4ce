//! A dense row-major `f32` tensor and the full-precision operations built on it.
//!
//! There is no broadcasting and no views: every operation makes one full pass
//! over its operands and allocates its result. Each pass bumps a global
//! counter so the cost of a composition can be measured with [`pass_count`].

use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::format::{BlockAssignment, BlockFloatFormat};
use crate::rng::{uniform_for_key, RngStream};
use crate::rounding::{round_kernel, RoundingMode};
use crate::scalar::{block_step, wrap_integral};

static PASSES: AtomicU64 = AtomicU64::new(0);

/// Total number of data passes performed by tensor operations and
/// quantization kernels since process start.
pub fn pass_count() -> u64 {
    PASSES.load(Ordering::Relaxed)
}

/// Records one full pass over a tensor's data. Kernels outside this module
/// call it so their passes are counted with the same hook.
#[inline]
pub fn record_pass() {
    PASSES.fetch_add(1, Ordering::Relaxed);
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

/// How flat indices map to blocks: block of element `i` is `(i / inner) % blocks`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub blocks: usize,
    pub inner: usize,
}

impl BlockLayout {
    pub fn new(shape: &[usize], block: BlockAssignment) -> Result<Self> {
        match block {
            BlockAssignment::WholeTensor => Ok(Self { blocks: 1, inner: 1 }),
            BlockAssignment::AlongDim(d) => {
                if d >= shape.len() {
                    return Err(Error::InvalidDimension { dim: d, rank: shape.len() });
                }
                Ok(Self {
                    blocks: shape[d],
                    inner: shape[d + 1..].iter().product(),
                })
            }
        }
    }

    #[inline(always)]
    pub fn block_of(&self, index: usize) -> usize {
        (index / self.inner) % self.blocks
    }

    /// Shape of the per-block reduction.
    pub fn reduced_shape(&self, block: BlockAssignment) -> Vec<usize> {
        match block {
            BlockAssignment::WholeTensor => Vec::new(),
            BlockAssignment::AlongDim(_) => vec![self.blocks],
        }
    }

    /// Visits `data` as runs of `inner` elements tagged with their block.
    pub(crate) fn for_each_run<F: FnMut(usize, usize, &[f32])>(&self, data: &[f32], mut f: F) {
        if self.blocks == 1 {
            f(0, 0, data);
            return;
        }
        if self.inner == 0 {
            return;
        }
        for (r, run) in data.chunks(self.inner).enumerate() {
            f(r % self.blocks, r * self.inner, run);
        }
    }
}

impl Tensor {
    /// Builds a tensor, checking the data length and that every value is finite.
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::BadLength { expected, actual: data.len() });
        }
        if let Some(&value) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { value });
        }
        Ok(Self { shape, data })
    }

    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f32>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn from_vec(data: Vec<f32>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::from_parts(shape.to_vec(), vec![0.0; shape.iter().product()])
    }

    pub fn scalar(value: f32) -> Result<Self> {
        Self::new(Vec::new(), vec![value])
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    /// Variates `uniform(stream, call, i)` for every flat index `i`.
    pub fn uniform(shape: &[usize], stream: RngStream, call: u64) -> Self {
        record_pass();
        let key = stream.call_key(call);
        let n: usize = shape.iter().product();
        let data = (0..n).map(|i| uniform_for_key(key, i as u64)).collect();
        Self::from_parts(shape.to_vec(), data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(Error::BadLength { expected, actual: self.data.len() });
        }
        Ok(Self { shape, data: self.data })
    }

    /// Bitwise equality, distinguishing `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &Tensor) -> bool {
        self.shape == other.shape
            && self.data.len() == other.data.len()
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    fn dims2(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::ShapeMismatch { op, left: self.shape.clone(), right: Vec::new() }),
        }
    }

    fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        record_pass();
        Self::from_parts(self.shape.clone(), self.data.iter().map(|&x| f(x)).collect())
    }

    fn zip(&self, other: &Tensor, op: &'static str, f: impl Fn(f32, f32) -> f32) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch { op, left: self.shape.clone(), right: other.shape.clone() });
        }
        record_pass();
        Ok(Self::from_parts(
            self.shape.clone(),
            self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    /// Matrix product with each output accumulated sequentially over the
    /// inner dimension in single precision.
    pub fn matmul(&self, b: &Tensor) -> Result<Tensor> {
        let (m, k) = self.dims2("matmul")?;
        let (k2, n) = b.dims2("matmul")?;
        if k != k2 {
            return Err(Error::ShapeMismatch { op: "matmul", left: self.shape.clone(), right: b.shape.clone() });
        }
        record_pass();
        let mut out = vec![0.0f32; m * n];
        for (row, out_row) in self.data.chunks_exact(k.max(1)).zip(out.chunks_exact_mut(n.max(1))) {
            for (p, &a) in row.iter().enumerate() {
                let b_row = &b.data[p * n..(p + 1) * n];
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += a * bv;
                }
            }
        }
        Ok(Self::from_parts(vec![m, n], out))
    }

    pub fn transpose(&self) -> Result<Tensor> {
        let (r, c) = self.dims2("transpose")?;
        record_pass();
        let mut out = vec![0.0f32; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(Self::from_parts(vec![c, r], out))
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, "mul", |a, b| a * b)
    }

    pub fn div(&self, other: &Tensor) -> Result<Tensor> {
        if other.data.contains(&0.0) {
            return Err(Error::DivisionByZero);
        }
        self.zip(other, "div", |a, b| a / b)
    }

    pub fn scale(&self, s: f32) -> Tensor {
        self.map(|x| x * s)
    }

    pub fn relu(&self) -> Tensor {
        self.map(|x| if x > 0.0 { x } else { 0.0 })
    }

    pub fn abs(&self) -> Tensor {
        self.map(f32::abs)
    }

    /// Passes `grad` where `input > 0`, zero elsewhere.
    pub fn relu_backward(&self, grad: &Tensor) -> Result<Tensor> {
        self.zip(grad, "relu_backward", |x, g| if x > 0.0 { g } else { 0.0 })
    }

    /// Row-wise softmax, shifted by the row maximum before exponentiating.
    pub fn softmax_rows(&self) -> Result<Tensor> {
        let (_, c) = self.dims2("softmax_rows")?;
        record_pass();
        let mut out = self.data.clone();
        for row in out.chunks_exact_mut(c.max(1)) {
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let mut sum = 0.0f32;
            for v in row.iter_mut() {
                *v = libm::expf(*v - max);
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Ok(Self::from_parts(self.shape.clone(), out))
    }

    /// Sum over rows of a matrix, giving one value per column.
    pub fn sum_rows(&self) -> Result<Tensor> {
        let (_, c) = self.dims2("sum_rows")?;
        record_pass();
        let mut out = vec![0.0f32; c];
        for row in self.data.chunks_exact(c.max(1)) {
            for (o, &v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        Ok(Self::from_parts(vec![c], out))
    }

    /// Index of the largest entry in each row.
    pub fn argmax_rows(&self) -> Result<Vec<usize>> {
        let (_, c) = self.dims2("argmax_rows")?;
        record_pass();
        Ok(self
            .data
            .chunks_exact(c.max(1))
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect())
    }

    /// Maximum absolute value per block. Whole-tensor reduction gives a
    /// rank-0 tensor; reduction along `d` gives one value per index along `d`.
    pub fn reduce_max_abs(&self, block: BlockAssignment) -> Result<Tensor> {
        let layout = BlockLayout::new(&self.shape, block)?;
        record_pass();
        let mut maxima = vec![0.0f32; layout.blocks];
        layout.for_each_run(&self.data, |b, _, run| {
            let m = &mut maxima[b];
            for &x in run {
                *m = m.max(x.abs());
            }
        });
        Ok(Self::from_parts(layout.reduced_shape(block), maxima))
    }

    /// Materialises one value per block over the full `shape`.
    pub fn expand_blocks(reduced: &Tensor, shape: &[usize], block: BlockAssignment) -> Result<Tensor> {
        let layout = BlockLayout::new(shape, block)?;
        if reduced.len() != layout.blocks {
            return Err(Error::ShapeMismatch {
                op: "expand_blocks",
                left: reduced.shape.clone(),
                right: shape.to_vec(),
            });
        }
        record_pass();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|i| reduced.data[layout.block_of(i)]).collect();
        Ok(Self::from_parts(shape.to_vec(), data))
    }

    /// Block step `2^(E - (wl - 2))` for each block maximum, `1` for zero blocks.
    pub fn block_steps(&self, fmt: &BlockFloatFormat) -> Tensor {
        self.map(|m| block_step(m, fmt).unwrap_or(1.0))
    }

    /// Rounds every element to an integral value. Stochastic rounding takes
    /// its variates elementwise from `variates`.
    pub fn round(&self, mode: RoundingMode, variates: Option<&Tensor>) -> Result<Tensor> {
        use RoundingMode::*;
        match (mode, variates) {
            (Stochastic, Some(u)) => self.zip(u, "round", |x, u| round_kernel(x, Stochastic, u)),
            (Stochastic, None) => Err(Error::MissingVariate),
            (NearestEven, _) => Ok(self.map(|x| round_kernel(x, NearestEven, 0.0))),
            (NearestAway, _) => Ok(self.map(|x| round_kernel(x, NearestAway, 0.0))),
            (NearestTowardZero, _) => Ok(self.map(|x| round_kernel(x, NearestTowardZero, 0.0))),
        }
    }

    pub fn clamp(&self, lo: f32, hi: f32) -> Tensor {
        self.map(|x| x.clamp(lo, hi))
    }

    /// Two's-complement wrap of integral values into `wl` bits.
    pub fn wrap(&self, wl: u32) -> Tensor {
        self.map(|x| wrap_integral(x, wl))
    }
}

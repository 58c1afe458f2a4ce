//! Low-precision arithmetic simulated in single-precision storage.
//!
//! Values of a low-precision format are stored as the `f32` they denote.
//! Computation runs in full single precision and the result is quantized
//! afterwards, so composite operations such as matrix products accumulate
//! at high precision. The crate provides:
//!
//! * [`format`]: low-width floating point, fixed point and block floating point;
//! * [`rounding`]: stochastic rounding and three nearest-rounding tie rules;
//! * [`scalar`] and [`enumerate`]: exact scalar quantizers and an oracle
//!   that lists every representable value of a format;
//! * [`tensor`] and [`quant`]: a dense tensor and fused / composed tensor quantizers;
//! * [`train`]: a small training harness with independent quantization of
//!   weights, gradients, accumulators, activations and errors.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod enumerate;
pub mod error;
pub mod format;
pub mod quant;
pub mod rng;
pub mod rounding;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use enumerate::{enumerate_representable, enumerate_representable_capped, DEFAULT_ENUMERATION_CAP};
pub use error::{Error, Result};
pub use format::{BlockAssignment, BlockFloatFormat, FixedFormat, FloatFormat, NumberFormat};
pub use quant::{quantize_composed, quantize_fused, quantized_op, FusedKernel, QuantSpec};
pub use rng::{uniform_variate, RngStream};
pub use rounding::{round_to_integral, RoundingMode};
pub use scalar::{quantize_scalar_block, quantize_scalar_fixed, quantize_scalar_float};
pub use tensor::Tensor;

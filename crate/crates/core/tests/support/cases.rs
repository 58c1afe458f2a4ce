//! Random tensors and quantization specs for equivalence checks.

#![allow(dead_code)]

use lowp_core::{BlockAssignment, BlockFloatFormat, FixedFormat, NumberFormat, QuantSpec, RoundingMode, Tensor};

use super::oracle::TestRng;

/// Rank 0..=max_rank, extents 1..=5, values spread over many binades with
/// some zeros and some exact grid points.
pub fn random_tensor(rng: &mut TestRng, max_rank: usize) -> Tensor {
    let rank = (rng.unit() * (max_rank + 1) as f64) as usize;
    let shape: Vec<usize> = (0..rank).map(|_| 1 + (rng.unit() * 5.0) as usize).collect();
    let n: usize = shape.iter().product();
    let scale = 2f64.powf(rng.unit() * 24.0 - 12.0);
    let data = (0..n)
        .map(|_| match (rng.unit() * 8.0) as u32 {
            0 => 0.0,
            1 => ((rng.unit() * 64.0).floor() - 32.0) as f32 * 0.125,
            _ => ((rng.unit() * 2.0 - 1.0) * scale) as f32,
        })
        .collect();
    Tensor::new(shape, data).unwrap()
}

/// A fixed or block spec with every option randomized.
pub fn random_spec(rng: &mut TestRng, rank: usize) -> QuantSpec {
    let mode = RoundingMode::ALL[(rng.unit() * 4.0) as usize];
    let wl = 2 + (rng.unit() * 15.0) as u32;
    let format: NumberFormat = if rng.unit() < 0.5 {
        let fl = (rng.unit() * 17.0) as i32 - 4;
        FixedFormat::new(wl, fl, rng.unit() < 0.5, rng.unit() < 0.7).unwrap().into()
    } else {
        let block = if rank == 0 || rng.unit() < 0.5 {
            BlockAssignment::WholeTensor
        } else {
            BlockAssignment::AlongDim((rng.unit() * rank as f64) as usize)
        };
        BlockFloatFormat::new(wl, block).unwrap().into()
    };
    let mut spec = QuantSpec::new(format, mode, rng.next_u64());
    spec.call_counter = rng.next_u64() >> 40;
    spec
}

//! Seeded synthetic classification data.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `n x dim` features.
    pub features: Tensor,
    pub labels: Vec<usize>,
    pub classes: usize,
}

/// Standard normal pair by Box-Muller.
fn gaussian_pair(stream: &RngStream, call: u64, index: u64) -> (f64, f64) {
    let u1 = 1.0 - stream.uniform_f64(call, 2 * index);
    let u2 = stream.uniform_f64(call, 2 * index + 1);
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let theta = 2.0 * core::f64::consts::PI * u2;
    (r * libm::cos(theta), r * libm::sin(theta))
}

impl Dataset {
    /// Two Gaussian blobs centred at `±2` on the first axis with unit
    /// variance. Points within `margin` of the hyperplane `x0 = 0` are
    /// redrawn, so the classes are linearly separable with that margin.
    pub fn blobs(n: usize, dim: usize, margin: f32, seed: u64) -> Result<Self> {
        if dim == 0 || n == 0 {
            return Err(Error::InvalidArgument("blobs need n > 0 and dim > 0".into()));
        }
        let stream = RngStream::new(seed);
        let mut features = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        let mut draw = 0u64;
        let mut next = || {
            let (a, _) = gaussian_pair(&stream, 0, draw);
            draw += 1;
            a as f32
        };
        for i in 0..n {
            let label = i % 2;
            let sign = if label == 1 { 1.0 } else { -1.0 };
            let x0 = loop {
                let x = sign * 2.0 + next();
                if x * sign > margin {
                    break x;
                }
            };
            features.push(x0);
            for _ in 1..dim {
                features.push(next());
            }
            labels.push(label);
        }
        Ok(Self { features: Tensor::new(alloc::vec![n, dim], features)?, labels, classes: 2 })
    }

    /// Two interleaving half circles with Gaussian noise of `noise` std.
    pub fn two_moons(n: usize, noise: f32, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("two_moons needs n > 0".into()));
        }
        let stream = RngStream::new(seed);
        let mut features = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let t = core::f64::consts::PI * stream.uniform_f64(1, i as u64);
            let (x, y) = if label == 0 {
                (libm::cos(t), libm::sin(t))
            } else {
                (1.0 - libm::cos(t), 0.5 - libm::sin(t))
            };
            let (nx, ny) = gaussian_pair(&stream, 2, i as u64);
            features.push((x + noise as f64 * nx) as f32);
            features.push((y + noise as f64 * ny) as f32);
            labels.push(label);
        }
        Ok(Self { features: Tensor::new(alloc::vec![n, 2], features)?, labels, classes: 2 })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.shape()[1]
    }

    /// Rows `indices` as a batch.
    pub fn batch(&self, indices: &[usize]) -> (Tensor, Vec<usize>) {
        let dim = self.dim();
        let data = self.features.data();
        let mut x = Vec::with_capacity(indices.len() * dim);
        for &i in indices {
            x.extend_from_slice(&data[i * dim..(i + 1) * dim]);
        }
        let y = indices.iter().map(|&i| self.labels[i]).collect();
        (Tensor::new(alloc::vec![indices.len(), dim], x).expect("rows of a finite tensor"), y)
    }
}

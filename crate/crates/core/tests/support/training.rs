//! The seeded desk-scale training setup shared by tests and acceptance.

#![allow(dead_code)]

use lowp_core::train::{Dataset, Model, QuantConfig, TrainOptions};
use lowp_core::{BlockAssignment, BlockFloatFormat, QuantSpec, RoundingMode};

pub fn dataset() -> Dataset {
    Dataset::blobs(512, 4, 0.5, 7).unwrap()
}

pub fn model() -> Model {
    Model::mlp(&[4, 16, 2], 3).unwrap()
}

pub fn options() -> TrainOptions {
    TrainOptions { epochs: 30, learning_rate: 0.05, momentum: 0.9, batch_size: 32, seed: 5 }
}

/// 8-bit whole-tensor block floating point with stochastic rounding for
/// all five categories.
pub fn block8() -> QuantConfig {
    let fmt = BlockFloatFormat::new(8, BlockAssignment::WholeTensor).unwrap();
    QuantConfig::uniform(QuantSpec::new(fmt, RoundingMode::Stochastic, 11))
}

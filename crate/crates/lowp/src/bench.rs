//! Wall-clock comparison of the fused kernel against the composed baseline,
//! and of quantized against full-precision training.

use std::collections::HashSet;
use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use lowp_core::train::{train, Dataset, Model, QuantConfig, TrainOptions};
use lowp_core::{quantize_composed, quantize_fused, FloatFormat, NumberFormat, QuantSpec, RoundingMode, RngStream, Tensor};
use serde::Serialize;
use thiserror::Error;

use crate::parallel::ParallelQuantizer;

const INPUT_SEED: u64 = 0x5eed;
const SPEC_SEED: u64 = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Implementation {
    Fused,
    Composed,
}

impl Implementation {
    pub fn name(self) -> &'static str {
        match self {
            Implementation::Fused => "fused",
            Implementation::Composed => "composed",
        }
    }
}

impl fmt::Display for Implementation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Implementation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fused" => Ok(Implementation::Fused),
            "composed" => Ok(Implementation::Composed),
            _ => Err(format!("unknown implementation `{s}` (expected fused or composed)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench case {id}: {reason}")]
    InvalidCase { id: String, reason: String },
    #[error("fused and composed outputs differ for {0}; refusing to time unequal implementations")]
    Mismatch(String),
    #[error(transparent)]
    Core(#[from] lowp_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCase {
    pub format: NumberFormat,
    pub mode: RoundingMode,
    pub implementation: Implementation,
    pub elements: usize,
    pub repeats: usize,
    pub warmup: usize,
    pub threads: usize,
}

impl BenchCase {
    pub fn new(format: NumberFormat, mode: RoundingMode, implementation: Implementation, elements: usize) -> Self {
        Self { format, mode, implementation, elements, repeats: 5, warmup: 1, threads: 1 }
    }

    pub fn id(&self) -> String {
        format!("{}/{}/{}/{}/t{}", self.format, self.mode, self.implementation, self.elements, self.threads)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let invalid = |reason: &str| Err(BenchError::InvalidCase { id: self.id(), reason: reason.into() });
        if self.repeats < 5 {
            return invalid("repeats must be at least 5");
        }
        if self.warmup < 1 {
            return invalid("warmup must be at least 1");
        }
        if self.elements == 0 {
            return invalid("elements must be positive");
        }
        if self.threads == 0 {
            return invalid("threads must be positive");
        }
        if self.implementation == Implementation::Composed {
            if let NumberFormat::Float(_) = self.format {
                return invalid("the composed implementation cannot simulate low-precision floating point");
            }
            if self.threads != 1 {
                return invalid("the composed implementation is single-threaded");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub case: BenchCase,
    pub median_ns: f64,
    pub iqr_ns: f64,
}

#[derive(Serialize)]
struct Row<'a> {
    #[serde(rename = "case-id")]
    case_id: String,
    format: String,
    mode: &'a str,
    implementation: &'a str,
    elements: usize,
    threads: usize,
    median_ns: u64,
    iqr_ns: u64,
}

/// Powers of two from 2^10 to 2^24.
pub fn default_sizes() -> Vec<usize> {
    (10..=24).map(|p| 1usize << p).collect()
}

/// The deterministic input used for a given size: uniform on [-4, 4).
pub fn bench_input(elements: usize) -> Tensor {
    let t = Tensor::uniform(&[elements], RngStream::new(INPUT_SEED), 0);
    let shift = Tensor::new(vec![elements], vec![4.0; elements]).expect("finite");
    t.scale(8.0).sub(&shift).expect("same shape")
}

/// Linear-interpolated quantile of sorted samples.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median and interquartile range of `samples`.
pub fn summarize(samples: &mut [f64]) -> (f64, f64) {
    samples.sort_by(f64::total_cmp);
    (quantile(samples, 0.5), quantile(samples, 0.75) - quantile(samples, 0.25))
}

/// Runs each case: an equivalence check of the implementations on the
/// case's input, `warmup` untimed runs, then `repeats` timed runs.
pub fn run_bench(cases: &[BenchCase]) -> Result<Vec<BenchResult>, BenchError> {
    for case in cases {
        case.validate()?;
    }
    let mut checked = HashSet::new();
    let mut results = Vec::with_capacity(cases.len());
    let mut input: Option<Tensor> = None;
    for case in cases {
        if input.as_ref().map(Tensor::len) != Some(case.elements) {
            input = Some(bench_input(case.elements));
        }
        let t = input.as_ref().expect("just set");
        let spec = QuantSpec::new(case.format, case.mode, SPEC_SEED);
        let parallel = ParallelQuantizer::new(case.threads);
        let run = || match case.implementation {
            Implementation::Fused => parallel.quantize(t, &spec),
            Implementation::Composed => quantize_composed(t, &spec),
        };

        let first = run()?;
        let reference = quantize_fused(t, &spec)?;
        if !first.bit_eq(&reference) {
            return Err(BenchError::Mismatch(case.id()));
        }
        let supports_composed = !matches!(case.format, NumberFormat::Float(_));
        if supports_composed && checked.insert((case.format, case.mode, case.elements)) {
            let other = match case.implementation {
                Implementation::Fused => quantize_composed(t, &spec)?,
                Implementation::Composed => reference,
            };
            if !other.bit_eq(&first) {
                return Err(BenchError::Mismatch(case.id()));
            }
        }
        drop(first);

        for _ in 0..case.warmup {
            black_box(run()?);
        }
        let mut samples = Vec::with_capacity(case.repeats);
        for _ in 0..case.repeats {
            let start = Instant::now();
            let out = black_box(run()?);
            samples.push(start.elapsed().as_nanos() as f64);
            drop(out);
        }
        let (median_ns, iqr_ns) = summarize(&mut samples);
        results.push(BenchResult { case: case.clone(), median_ns, iqr_ns });
    }
    Ok(results)
}

pub fn write_csv(results: &[BenchResult], out: impl Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(Row {
            case_id: r.case.id(),
            format: r.case.format.to_string(),
            mode: r.case.mode.name(),
            implementation: r.case.implementation.name(),
            elements: r.case.elements,
            threads: r.case.threads,
            median_ns: r.median_ns.round() as u64,
            iqr_ns: r.iqr_ns.round() as u64,
        })?;
    }
    if results.is_empty() {
        w.write_record(["case-id", "format", "mode", "implementation", "elements", "threads", "median_ns", "iqr_ns"])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overhead {
    pub quantized_epoch_ns: f64,
    pub baseline_epoch_ns: f64,
}

impl Overhead {
    pub fn ratio(&self) -> f64 {
        self.quantized_epoch_ns / self.baseline_epoch_ns
    }
}

/// All five categories quantized to single precision: the quantizers run
/// but change nothing.
pub fn identity_config() -> QuantConfig {
    QuantConfig::uniform(QuantSpec::new(FloatFormat::SINGLE, RoundingMode::NearestEven, 0))
}

/// Per-epoch training time with `cfg` and without quantization, on a fixed
/// synthetic task big enough for matrix products to dominate. Each side is
/// the median of five alternating runs.
pub fn run_training_overhead(epochs: usize, cfg: &QuantConfig) -> Result<Overhead, BenchError> {
    let data = Dataset::blobs(2048, 64, 0.5, 1)?;
    let model = Model::mlp(&[64, 128, 2], 2)?;
    let opts = TrainOptions { epochs: epochs.max(1), learning_rate: 0.05, momentum: 0.9, batch_size: 64, seed: 3 };
    let time = |cfg: &QuantConfig| -> Result<f64, BenchError> {
        let start = Instant::now();
        black_box(train(model.clone(), &data, cfg, &opts)?);
        Ok(start.elapsed().as_nanos() as f64 / opts.epochs as f64)
    };
    time(&QuantConfig::default())?;
    let (mut quantized, mut baseline) = (Vec::new(), Vec::new());
    for _ in 0..5 {
        baseline.push(time(&QuantConfig::default())?);
        quantized.push(time(cfg)?);
    }
    Ok(Overhead { quantized_epoch_ns: summarize(&mut quantized).0, baseline_epoch_ns: summarize(&mut baseline).0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lowp_core::FixedFormat;

    #[test]
    fn summary_statistics() {
        assert_eq!(summarize(&mut [5.0, 1.0, 3.0, 2.0, 4.0]), (3.0, 2.0));
        assert_eq!(summarize(&mut [1.0, 2.0, 3.0, 4.0]), (2.5, 1.5));
    }

    #[test]
    fn validation() {
        let fixed: NumberFormat = FixedFormat::saturating(8, 4).unwrap().into();
        let float: NumberFormat = FloatFormat::new(5, 2).unwrap().into();
        let ok = BenchCase::new(fixed, RoundingMode::NearestEven, Implementation::Composed, 1024);
        assert!(ok.validate().is_ok());
        assert!(BenchCase { repeats: 4, ..ok.clone() }.validate().is_err());
        assert!(BenchCase { warmup: 0, ..ok.clone() }.validate().is_err());
        assert!(BenchCase { format: float, ..ok.clone() }.validate().is_err());
        assert!(BenchCase { format: float, implementation: Implementation::Fused, ..ok }.validate().is_ok());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let fixed: NumberFormat = FixedFormat::saturating(8, 4).unwrap().into();
        let cases = [
            BenchCase::new(fixed, RoundingMode::Stochastic, Implementation::Fused, 1024),
            BenchCase::new(fixed, RoundingMode::Stochastic, Implementation::Composed, 1024),
        ];
        let results = run_bench(&cases).unwrap();
        let mut out = Vec::new();
        write_csv(&results, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "case-id,format,mode,implementation,elements,threads,median_ns,iqr_ns");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("fixed:8:4/stochastic/fused/1024/t1,fixed:8:4,stochastic,fused,1024,1,"));
    }
}

//! Subcommands of the `lowp` binary. Exit codes: 0 success, 2 usage or
//! validation error, 3 numeric failure.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lowp_core::train::{train, Dataset, Model, QuantConfig, TrainOptions, TrainTrace};
use lowp_core::{enumerate_representable, NumberFormat, QuantSpec, RoundingMode};

use crate::bench::{self, BenchCase, BenchError, Implementation};
use crate::config::parse_config;
use crate::parallel::ParallelQuantizer;
use crate::spec::{parse_format, parse_rounding};
use crate::tensorfile::{self, TensorFileError};
use crate::Diagnostic;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<Diagnostic> for CliError {
    fn from(d: Diagnostic) -> Self {
        CliError::Usage(d.to_string())
    }
}

/// Numeric failures from the core are exit 3; everything else it reports
/// is a bad argument.
fn core(e: lowp_core::Error) -> CliError {
    match e {
        lowp_core::Error::NonFinite { .. } | lowp_core::Error::DivisionByZero => CliError::Numeric(e.to_string()),
        lowp_core::Error::InvalidFormat { .. } => Diagnostic::from(e).into(),
        other => CliError::Usage(other.to_string()),
    }
}

fn io_error(what: &str, path: &std::path::Path, e: io::Error) -> CliError {
    CliError::Usage(format!("{what} {}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "lowp", version, about = "Simulate low-precision arithmetic and training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantize a tensor file.
    Quantize(QuantizeArgs),
    /// Print every representable value of a format, one per line.
    Enumerate(EnumerateArgs),
    /// Train the built-in MLP on the built-in synthetic dataset.
    Train(TrainArgs),
    /// Time fused against composed quantization and write a CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub output: PathBuf,
    /// e.g. `fixed:8:4`, `float:5:2`, `block:8`, `block:8:1`.
    #[arg(long)]
    pub format: String,
    #[arg(long, default_value = "nearest_even")]
    pub rounding: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub format: String,
    /// Shared exponent; required for block formats.
    #[arg(long, allow_hyphen_values = true)]
    pub block_exponent: Option<i32>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON quantization config; omitted means full precision.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    pub lr: f32,
    #[arg(long, default_value_t = 0.9, allow_hyphen_values = true)]
    pub momentum: f32,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-epoch CSV of loss and accuracy.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated element counts; default 2^10..2^24.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Comma-separated spec strings, or `fixed`, `block`, `float` for the
    /// defaults `fixed:8:4`, `block:8`, `float:5:2`.
    #[arg(long, value_delimiter = ',', default_value = "fixed,block,float")]
    pub formats: Vec<String>,
    /// `fused`, `composed` or `both`.
    #[arg(long = "impl", default_value = "both")]
    pub implementation: String,
    #[arg(long, value_delimiter = ',', default_value = "nearest_even,stochastic")]
    pub rounding: Vec<String>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Threads for the fused implementation.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// Also time this many training epochs with identity and block-8
    /// quantization against full precision.
    #[arg(long, default_value_t = 0)]
    pub overhead_epochs: usize,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Quantize(a) => quantize(a),
        Command::Enumerate(a) => enumerate(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Bench(a) => bench_cmd(a, out),
    }
}

fn quantize(a: QuantizeArgs) -> Result<(), CliError> {
    let format = parse_format(&a.format)?;
    let mode = parse_rounding(&a.rounding)?;
    if a.threads == 0 {
        return Err(Diagnostic::new("threads", "must be at least 1").into());
    }
    let t = tensorfile::read_path(&a.input).map_err(|e| match e {
        TensorFileError::NonFinite { .. } => CliError::Numeric(format!("{}: {e}", a.input.display())),
        TensorFileError::Io(io) => io_error("cannot read", &a.input, io),
        e => CliError::Usage(format!("{}: {e}", a.input.display())),
    })?;
    let spec = QuantSpec::new(format, mode, a.seed);
    let q = ParallelQuantizer::new(a.threads).quantize(&t, &spec).map_err(core)?;
    tensorfile::write_path(&a.output, &q).map_err(|e| io_error("cannot write", &a.output, e))
}

fn enumerate(a: EnumerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let format = parse_format(&a.format)?;
    let exponent = match (format, a.block_exponent) {
        (NumberFormat::Block(_), None) => {
            return Err(Diagnostic::new("block-exponent", "block formats need --block-exponent").into())
        }
        (NumberFormat::Block(_), e) => e,
        (_, Some(_)) => return Err(Diagnostic::new("block-exponent", "only block formats take a block exponent").into()),
        (_, None) => None,
    };
    let values = enumerate_representable(&format, exponent).map_err(core)?;
    let mut text = String::with_capacity(values.len() * 8);
    for v in values {
        text.push_str(&format!("{v:?}\n"));
    }
    out.write_all(text.as_bytes()).map_err(|e| CliError::Usage(e.to_string()))
}

/// The built-in task: separable Gaussian blobs and a 4-16-2 MLP, all
/// seeded from `seed`.
pub fn builtin_task(seed: u64) -> Result<(Dataset, Model), lowp_core::Error> {
    Ok((Dataset::blobs(512, 4, 0.5, seed.wrapping_add(7))?, Model::mlp(&[4, 16, 2], seed.wrapping_add(3))?))
}

pub fn run_builtin_training(cfg: &QuantConfig, opts: &TrainOptions) -> Result<TrainTrace, lowp_core::Error> {
    let (data, model) = builtin_task(opts.seed)?;
    let opts = TrainOptions { seed: opts.seed.wrapping_add(5), ..*opts };
    Ok(train(model, &data, cfg, &opts)?.1)
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_error("cannot read", path, e))?;
            parse_config(&text, a.seed)?
        }
        None => QuantConfig::default(),
    };
    if !(a.lr.is_finite() && a.lr >= 0.0) {
        return Err(Diagnostic::new("lr", format!("learning rate {} must be finite and >= 0", a.lr)).into());
    }
    if !(0.0..1.0).contains(&a.momentum) {
        return Err(Diagnostic::new("momentum", format!("momentum {} must be in [0, 1)", a.momentum)).into());
    }
    if a.batch_size == 0 {
        return Err(Diagnostic::new("batch-size", "must be at least 1").into());
    }
    let opts = TrainOptions { epochs: a.epochs, learning_rate: a.lr, momentum: a.momentum, batch_size: a.batch_size, seed: a.seed };
    let trace = run_builtin_training(&cfg, &opts).map_err(core)?;
    if let Some(m) = trace.epochs.iter().find(|m| !m.loss.is_finite()) {
        return Err(CliError::Numeric(format!("loss diverged at epoch {}", m.epoch)));
    }
    if let Some(path) = &a.trace_out {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        let result: Result<(), csv::Error> = (|| {
            w.write_record(["epoch", "loss", "accuracy"])?;
            for m in &trace.epochs {
                w.write_record([m.epoch.to_string(), format!("{:?}", m.loss), format!("{:?}", m.accuracy)])?;
            }
            w.flush()?;
            Ok(())
        })();
        result.map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let line = match trace.final_accuracy() {
        Some(acc) => format!("final accuracy: {acc:.4}\n"),
        None => "no epochs run\n".to_string(),
    };
    out.write_all(line.as_bytes()).map_err(|e| CliError::Usage(e.to_string()))
}

fn bench_format(s: &str) -> Result<NumberFormat, Diagnostic> {
    match s {
        "fixed" => parse_format("fixed:8:4"),
        "block" => parse_format("block:8"),
        "float" => parse_format("float:5:2"),
        other => parse_format(other),
    }
}

/// Expands the flags into cases, rejecting an explicitly requested composed
/// float benchmark. With `--impl both`, float formats are timed fused only.
pub fn bench_cases(a: &BenchArgs) -> Result<Vec<BenchCase>, CliError> {
    let impls: &[Implementation] = match a.implementation.as_str() {
        "both" => &[Implementation::Fused, Implementation::Composed],
        "fused" => &[Implementation::Fused],
        "composed" => &[Implementation::Composed],
        other => return Err(Diagnostic::new("impl", format!("`{other}` is not fused, composed or both")).into()),
    };
    let formats = a.formats.iter().map(|f| bench_format(f)).collect::<Result<Vec<_>, _>>()?;
    let modes = a.rounding.iter().map(|r| parse_rounding(r)).collect::<Result<Vec<RoundingMode>, _>>()?;
    let sizes = if a.sizes.is_empty() { bench::default_sizes() } else { a.sizes.clone() };
    let mut cases = Vec::new();
    for &format in &formats {
        let is_float = matches!(format, NumberFormat::Float(_));
        if is_float && impls == [Implementation::Composed] {
            return Err(Diagnostic::new(
                "impl",
                format!("composed quantization cannot simulate low-precision floating point ({format})"),
            )
            .into());
        }
        for &mode in &modes {
            for &elements in &sizes {
                for &implementation in impls {
                    if is_float && implementation == Implementation::Composed {
                        continue;
                    }
                    let threads = if implementation == Implementation::Fused { a.threads } else { 1 };
                    let case = BenchCase { format, mode, implementation, elements, repeats: a.repeats, warmup: a.warmup, threads };
                    case.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                    cases.push(case);
                }
            }
        }
    }
    Ok(cases)
}

fn bench_cmd(a: BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cases = bench_cases(&a)?;
    let bench_err = |e: BenchError| match e {
        BenchError::Core(e) => core(e),
        BenchError::Mismatch(_) => CliError::Numeric(e.to_string()),
        e => CliError::Usage(e.to_string()),
    };
    let results = bench::run_bench(&cases).map_err(bench_err)?;
    match &a.csv {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| io_error("cannot write", path, e))?;
            bench::write_csv(&results, io::BufWriter::new(file)).map_err(bench_err)?;
        }
        None => bench::write_csv(&results, &mut *out).map_err(bench_err)?,
    }
    if a.overhead_epochs > 0 {
        let fmt = lowp_core::BlockFloatFormat::new(8, lowp_core::BlockAssignment::WholeTensor).map_err(core)?;
        let block8 = QuantConfig::uniform(QuantSpec::new(fmt, RoundingMode::Stochastic, 0));
        for (name, cfg) in [("identity", bench::identity_config()), ("block8", block8)] {
            let o = bench::run_training_overhead(a.overhead_epochs, &cfg).map_err(bench_err)?;
            eprintln!(
                "training overhead {name}: {:.3} ms/epoch vs {:.3} ms/epoch fp32 (ratio {:.3})",
                o.quantized_epoch_ns / 1e6,
                o.baseline_epoch_ns / 1e6,
                o.ratio()
            );
        }
    }
    Ok(())
}

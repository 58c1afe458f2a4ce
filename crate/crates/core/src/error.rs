use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by format construction, quantization, tensor ops and training.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A NaN or infinite value reached an operation that requires finite input.
    NonFinite { value: f32 },
    /// A format parameter is out of its allowed range.
    InvalidFormat { field: &'static str, message: String },
    /// Stochastic rounding was requested without a uniform variate.
    MissingVariate,
    /// The representable set exceeds the enumeration cap.
    TooLarge { count: u64, cap: u64 },
    /// Block-float enumeration needs the shared exponent.
    MissingBlockExponent,
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    /// Data length does not match the product of the extents.
    BadLength { expected: usize, actual: usize },
    InvalidDimension { dim: usize, rank: usize },
    DivisionByZero,
    /// The composed baseline cannot express this format.
    UnsupportedFormat(&'static str),
    DoubleInjection,
    StaleCache,
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite { value } => write!(f, "non-finite value {value}"),
            Error::InvalidFormat { field, message } => {
                write!(f, "invalid format field `{field}`: {message}")
            }
            Error::MissingVariate => f.write_str("stochastic rounding requires a uniform variate"),
            Error::TooLarge { count, cap } => {
                write!(f, "representable set has {count} values, cap is {cap}")
            }
            Error::MissingBlockExponent => {
                f.write_str("block floating point enumeration requires a shared exponent")
            }
            Error::ShapeMismatch { op, left, right } => {
                write!(f, "{op}: shape mismatch {left:?} vs {right:?}")
            }
            Error::BadLength { expected, actual } => {
                write!(f, "data length {actual} does not match shape volume {expected}")
            }
            Error::InvalidDimension { dim, rank } => {
                write!(f, "dimension {dim} is invalid for a rank-{rank} tensor")
            }
            Error::DivisionByZero => f.write_str("division by zero"),
            Error::UnsupportedFormat(why) => write!(f, "unsupported format: {why}"),
            Error::DoubleInjection => f.write_str("model already contains quantizer layers"),
            Error::StaleCache => f.write_str("forward cache does not belong to the current model"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_finite(value: f32) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { value })
    }
}

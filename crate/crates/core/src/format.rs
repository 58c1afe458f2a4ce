//! Number formats simulated inside single-precision storage.
//!
//! Every format describes a finite lattice of values that are all exactly
//! representable as `f32`. Constructors validate the parameters so that the
//! lattice, its step and its extremes never leave the normal `f32` range.

use alloc::format;

use crate::error::{Error, Result};
use crate::scalar::pow2;

/// Largest unbiased exponent a single-precision normal can carry.
pub const STORAGE_MAX_EXP: i32 = 127;
/// Smallest unbiased exponent of a single-precision normal.
pub const STORAGE_MIN_EXP: i32 = -126;
/// Fixed point and block float are limited by the 24-bit significand of `f32`.
pub const MAX_WORD_LENGTH: u32 = 24;

/// Low-width floating point: `exp_bits` of exponent, `man_bits` stored mantissa bits.
///
/// No exponent code is reserved for Inf/NaN and there are no denormals, so
/// the top code holds ordinary normals and code zero holds only zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FloatFormat {
    exp_bits: u32,
    man_bits: u32,
}

impl FloatFormat {
    pub fn new(exp_bits: u32, man_bits: u32) -> Result<Self> {
        if !(1..=8).contains(&exp_bits) {
            return Err(Error::InvalidFormat {
                field: "exp",
                message: format!("exponent bits must be in 1..=8, got {exp_bits}"),
            });
        }
        if man_bits > 23 {
            return Err(Error::InvalidFormat {
                field: "man",
                message: format!("mantissa bits must be in 0..=23, got {man_bits}"),
            });
        }
        Ok(Self { exp_bits, man_bits })
    }

    /// The storage format itself; quantizing to it is the identity on normals.
    pub const SINGLE: FloatFormat = FloatFormat { exp_bits: 8, man_bits: 23 };

    pub fn exp_bits(&self) -> u32 {
        self.exp_bits
    }

    pub fn man_bits(&self) -> u32 {
        self.man_bits
    }

    pub fn bias(&self) -> i32 {
        (1 << (self.exp_bits - 1)) - 1
    }

    pub fn e_min(&self) -> i32 {
        1 - self.bias()
    }

    /// Largest exponent, capped at what `f32` storage can hold (only the
    /// 8-bit exponent format hits the cap).
    pub fn e_max(&self) -> i32 {
        (((1 << self.exp_bits) - 1) - self.bias()).min(STORAGE_MAX_EXP)
    }

    /// Largest finite magnitude `(2 - 2^-man) * 2^e_max`.
    pub fn max_value(&self) -> f32 {
        let significand = 2.0f64 - libm::ldexp(1.0, -(self.man_bits as i32));
        libm::ldexp(significand, self.e_max()) as f32
    }

    /// Smallest positive normal, `2^e_min`.
    pub fn min_normal(&self) -> f32 {
        pow2(self.e_min())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::SINGLE
    }
}

/// Two's-complement fixed point with word length `wl` and fractional length `fl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedFormat {
    wl: u32,
    fl: i32,
    symmetric: bool,
    saturate: bool,
}

impl FixedFormat {
    /// `fl` may be negative or exceed `wl`, but must keep the step `2^-fl` and
    /// the extremes `k * 2^-fl` inside the normal `f32` range, which bounds it
    /// to `wl - 128 ..= 126`.
    pub fn new(wl: u32, fl: i32, symmetric: bool, saturate: bool) -> Result<Self> {
        if !(2..=MAX_WORD_LENGTH).contains(&wl) {
            return Err(Error::InvalidFormat {
                field: "wl",
                message: format!("word length must be in 2..=24, got {wl}"),
            });
        }
        let lo = wl as i32 - 128;
        if fl < lo || fl > 126 {
            return Err(Error::InvalidFormat {
                field: "fl",
                message: format!("fractional length must be in {lo}..=126 for wl={wl}, got {fl}"),
            });
        }
        Ok(Self { wl, fl, symmetric, saturate })
    }

    /// Saturating, asymmetric format (the common case).
    pub fn saturating(wl: u32, fl: i32) -> Result<Self> {
        Self::new(wl, fl, false, true)
    }

    pub fn wl(&self) -> u32 {
        self.wl
    }

    pub fn fl(&self) -> i32 {
        self.fl
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn saturate(&self) -> bool {
        self.saturate
    }

    /// `2^-fl`
    pub fn step(&self) -> f32 {
        pow2(-self.fl)
    }

    /// `2^fl`
    pub fn inv_step(&self) -> f32 {
        pow2(self.fl)
    }

    pub fn k_max(&self) -> i64 {
        (1i64 << (self.wl - 1)) - 1
    }

    pub fn k_min(&self) -> i64 {
        if self.symmetric {
            -self.k_max()
        } else {
            -(1i64 << (self.wl - 1))
        }
    }

    pub fn max_value(&self) -> f32 {
        self.k_max() as f32 * self.step()
    }

    pub fn min_value(&self) -> f32 {
        self.k_min() as f32 * self.step()
    }
}

/// Which elements share one exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockAssignment {
    /// The whole tensor is a single block.
    WholeTensor,
    /// One block per index along dimension `d`; the block at index `j` is
    /// every element whose coordinate along `d` equals `j`.
    AlongDim(usize),
}

/// Block floating point: each element keeps a `wl`-bit signed mantissa and
/// shares its exponent with the rest of its block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockFloatFormat {
    wl: u32,
    block: BlockAssignment,
}

impl BlockFloatFormat {
    pub fn new(wl: u32, block: BlockAssignment) -> Result<Self> {
        if !(2..=MAX_WORD_LENGTH).contains(&wl) {
            return Err(Error::InvalidFormat {
                field: "wl",
                message: format!("word length must be in 2..=24, got {wl}"),
            });
        }
        Ok(Self { wl, block })
    }

    pub fn wl(&self) -> u32 {
        self.wl
    }

    pub fn block(&self) -> BlockAssignment {
        self.block
    }

    pub fn k_max(&self) -> i64 {
        (1i64 << (self.wl - 1)) - 1
    }

    /// Symmetric with `k_max`: `-2^(wl-1)` would equal `-2^(E+1)` and so
    /// belong to the next binade, breaking idempotence.
    pub fn k_min(&self) -> i64 {
        -self.k_max()
    }

    /// The shared exponent actually used for a block whose largest magnitude
    /// has exponent `e`. It is clamped so the step `2^(e - (wl - 2))` stays a
    /// normal `f32` and `2^(e + 1)` stays finite.
    pub fn effective_exponent(&self, e: i32) -> i32 {
        e.clamp(self.wl as i32 - 128, 126)
    }

    /// Step of the block grid for shared exponent `e`.
    pub fn step_for_exponent(&self, e: i32) -> f32 {
        pow2(self.effective_exponent(e) - (self.wl as i32 - 2))
    }
}

/// Any of the simulated formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumberFormat {
    Float(FloatFormat),
    Fixed(FixedFormat),
    Block(BlockFloatFormat),
}

impl NumberFormat {
    pub fn kind(&self) -> &'static str {
        match self {
            NumberFormat::Float(_) => "float",
            NumberFormat::Fixed(_) => "fixed",
            NumberFormat::Block(_) => "block",
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, NumberFormat::Float(f) if f.is_identity())
    }
}

impl From<FloatFormat> for NumberFormat {
    fn from(f: FloatFormat) -> Self {
        NumberFormat::Float(f)
    }
}

impl From<FixedFormat> for NumberFormat {
    fn from(f: FixedFormat) -> Self {
        NumberFormat::Fixed(f)
    }
}

impl From<BlockFloatFormat> for NumberFormat {
    fn from(f: BlockFloatFormat) -> Self {
        NumberFormat::Block(f)
    }
}

impl core::fmt::Display for NumberFormat {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NumberFormat::Float(x) => write!(f, "float:{}:{}", x.exp_bits, x.man_bits),
            NumberFormat::Fixed(x) => {
                write!(f, "fixed:{}:{}", x.wl, x.fl)?;
                if x.symmetric {
                    f.write_str(":symmetric")?;
                }
                if !x.saturate {
                    f.write_str(":wrap")?;
                }
                Ok(())
            }
            NumberFormat::Block(x) => match x.block {
                BlockAssignment::WholeTensor => write!(f, "block:{}", x.wl),
                BlockAssignment::AlongDim(d) => write!(f, "block:{}:{}", x.wl, d),
            },
        }
    }
}

//! Direct construction of every representable value of a format.
//!
//! This is the test oracle for the quantizers, so it is built from the
//! format definitions alone and never calls into the rounding code.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::format::NumberFormat;

/// Default cap on the size of an enumerated set.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

/// Number of distinct values of `fmt` (for block float, per shared exponent).
pub fn representable_count(fmt: &NumberFormat) -> u64 {
    match fmt {
        NumberFormat::Fixed(f) => (f.k_max() - f.k_min() + 1) as u64,
        NumberFormat::Float(f) => {
            let binades = (f.e_max() - f.e_min() + 1) as u64;
            1 + 2 * binades * (1u64 << f.man_bits())
        }
        NumberFormat::Block(b) => (b.k_max() - b.k_min() + 1) as u64,
    }
}

/// Sorted, duplicate-free list of every value `fmt` can represent, capped at
/// [`DEFAULT_ENUMERATION_CAP`]. Block float needs the shared exponent.
pub fn enumerate_representable(fmt: &NumberFormat, block_exponent: Option<i32>) -> Result<Vec<f32>> {
    enumerate_representable_capped(fmt, block_exponent, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_representable_capped(
    fmt: &NumberFormat,
    block_exponent: Option<i32>,
    cap: u64,
) -> Result<Vec<f32>> {
    let count = representable_count(fmt);
    if count > cap {
        return Err(Error::TooLarge { count, cap });
    }
    let mut values: Vec<f32> = match fmt {
        NumberFormat::Fixed(f) => {
            let step = libm::ldexp(1.0, -f.fl());
            (f.k_min()..=f.k_max()).map(|k| (k as f64 * step) as f32).collect()
        }
        NumberFormat::Float(f) => {
            let man = f.man_bits() as i32;
            let mut v = Vec::with_capacity(count as usize);
            v.push(0.0);
            for e in f.e_min()..=f.e_max() {
                for j in 0..(1i64 << man) {
                    // (1 + j/2^man) * 2^e
                    let x = libm::ldexp(((1i64 << man) + j) as f64, e - man) as f32;
                    v.push(x);
                    v.push(-x);
                }
            }
            v
        }
        NumberFormat::Block(b) => {
            let e = block_exponent.ok_or(Error::MissingBlockExponent)?;
            let step = libm::ldexp(1.0, b.effective_exponent(e) - (b.wl() as i32 - 2));
            (b.k_min()..=b.k_max()).map(|k| (k as f64 * step) as f32).collect()
        }
    };
    values.sort_by(f32::total_cmp);
    values.dedup();
    Ok(values)
}

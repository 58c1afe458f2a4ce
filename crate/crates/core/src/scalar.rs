//! Exact scalar quantization onto fixed point, low-width float and block float.
//!
//! All arithmetic is single precision and every step is exact by
//! construction: scaling by powers of two, `floor`, fractional parts of
//! non-negative values, and products of small integers with powers of two.
//! The tensor kernels in [`crate::quant`] reuse these helpers element by
//! element so their results match the scalar definitions bit for bit.

use alloc::vec::Vec;

use crate::error::{check_finite, Error, Result};
use crate::format::{BlockFloatFormat, FixedFormat, FloatFormat};
use crate::rounding::{floor_f32, round_kernel, RoundingMode};

/// `2^n` as `f32` for `n` in `-149..=127`, built from the bit pattern.
pub fn pow2(n: i32) -> f32 {
    debug_assert!((-149..=127).contains(&n), "2^{n} is outside f32");
    if n >= -126 {
        f32::from_bits(((n + 127) as u32) << 23)
    } else {
        f32::from_bits(1u32 << (n + 149))
    }
}

/// `floor(log2(|x|))` read from the exponent field, so powers of two are
/// classified exactly. Subnormals are handled through the leading bit of
/// the fraction. `x` must be finite and non-zero.
#[inline(always)]
pub fn floor_log2(x: f32) -> i32 {
    let bits = x.to_bits() & 0x7fff_ffff;
    let exp = (bits >> 23) as i32;
    if exp != 0 {
        exp - 127
    } else {
        let frac = bits & 0x007f_ffff;
        debug_assert!(frac != 0, "floor_log2 of zero");
        (31 - frac.leading_zeros() as i32) - 149
    }
}

fn need_variate(mode: RoundingMode, u: Option<f32>) -> Result<f32> {
    if !mode.is_stochastic() {
        return Ok(0.0);
    }
    let u = u.ok_or(Error::MissingVariate)?;
    if (0.0..1.0).contains(&u) {
        Ok(u)
    } else {
        Err(Error::InvalidArgument(alloc::format!("variate {u} is outside [0, 1)")))
    }
}

/// Two's-complement reduction of an integral value into `wl` bits.
/// Values whose scaled magnitude overflowed single precision are multiples
/// of every `2^wl` and wrap to zero.
#[inline(always)]
pub(crate) fn wrap_integral(k: f32, wl: u32) -> f32 {
    if !k.is_finite() {
        return 0.0;
    }
    let modulus = pow2(wl as i32);
    let inv_modulus = pow2(-(wl as i32));
    let m = k - floor_f32(k * inv_modulus) * modulus;
    let wrapped = if m >= pow2(wl as i32 - 1) { m - modulus } else { m };
    wrapped + 0.0
}

#[inline(always)]
pub(crate) fn fixed_kernel(x: f32, fmt: &FixedParams, mode: RoundingMode, u: f32) -> f32 {
    if fmt.saturate {
        fixed_saturating_kernel(x, fmt, mode, u)
    } else {
        fixed_wrapping_kernel(x, fmt, mode, u)
    }
}

#[inline(always)]
pub(crate) fn fixed_saturating_kernel(x: f32, fmt: &FixedParams, mode: RoundingMode, u: f32) -> f32 {
    round_kernel(x * fmt.inv_step, mode, u).clamp(fmt.k_min, fmt.k_max) * fmt.step
}

#[inline(always)]
pub(crate) fn fixed_wrapping_kernel(x: f32, fmt: &FixedParams, mode: RoundingMode, u: f32) -> f32 {
    wrap_integral(round_kernel(x * fmt.inv_step, mode, u), fmt.wl) * fmt.step
}

/// Pre-computed constants for the fixed-point kernel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FixedParams {
    pub step: f32,
    pub inv_step: f32,
    pub k_min: f32,
    pub k_max: f32,
    pub wl: u32,
    pub saturate: bool,
}

impl From<&FixedFormat> for FixedParams {
    fn from(f: &FixedFormat) -> Self {
        Self {
            step: f.step(),
            inv_step: f.inv_step(),
            k_min: f.k_min() as f32,
            k_max: f.k_max() as f32,
            wl: f.wl(),
            saturate: f.saturate(),
        }
    }
}

/// Quantizes `x` to fixed point: `k = round(x / step)`, saturated or
/// wrapped into the integer range, times `step`.
pub fn quantize_scalar_fixed(x: f32, fmt: &FixedFormat, mode: RoundingMode, u: Option<f32>) -> Result<f32> {
    check_finite(x)?;
    let u = need_variate(mode, u)?;
    Ok(fixed_kernel(x, &FixedParams::from(fmt), mode, u))
}

/// Pre-computed constants for the float kernel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FloatParams {
    man_bits: u32,
    e_min: i32,
    e_max: i32,
    max_value: f32,
    /// `2^(man - 23)`: turns the 24-bit significand into `[2^man, 2^(man+1))`.
    significand_scale: f32,
    /// `2^-e_min`
    underflow_scale: f32,
    min_normal: f32,
}

impl From<&FloatFormat> for FloatParams {
    fn from(f: &FloatFormat) -> Self {
        Self {
            man_bits: f.man_bits(),
            e_min: f.e_min(),
            e_max: f.e_max(),
            max_value: f.max_value(),
            significand_scale: pow2(f.man_bits() as i32 - 23),
            underflow_scale: pow2(-f.e_min()),
            min_normal: f.min_normal(),
        }
    }
}

#[inline(always)]
pub(crate) fn float_kernel(x: f32, p: &FloatParams, mode: RoundingMode, u: f32) -> f32 {
    if x == 0.0 {
        return x;
    }
    let a = x.abs();
    let e = floor_log2(a);
    let magnitude = if e > p.e_max {
        p.max_value
    } else if e < p.e_min {
        // Below the smallest normal the grid is {0, 2^e_min}.
        round_kernel(a * p.underflow_scale, mode, u) * p.min_normal
    } else {
        let significand = (a.to_bits() & 0x007f_ffff) | 0x0080_0000;
        let k = round_kernel(significand as f32 * p.significand_scale, mode, u);
        // k * 2^(e - man) with 2^man <= k <= 2^(man+1) is exact in f32; a
        // carry past the top binade overflows to inf and saturates below.
        let q = k * pow2(e - p.man_bits as i32);
        if q > p.max_value {
            p.max_value
        } else {
            q
        }
    };
    // A nonzero input that rounds to zero gives +0, as in the other formats.
    magnitude.copysign(x) + 0.0
}

/// Quantizes `x` to a low-width float with no denormals, NaN or Inf.
///
/// Normal values round on the grid of their binade, carrying into the next
/// binade when the significand rounds up to `2^(man+1)`. Values beyond the
/// largest magnitude saturate to `±max`. Values below the smallest normal
/// round over `{0, ±2^e_min}` with the active mode.
pub fn quantize_scalar_float(x: f32, fmt: &FloatFormat, mode: RoundingMode, u: Option<f32>) -> Result<f32> {
    check_finite(x)?;
    let u = need_variate(mode, u)?;
    Ok(float_kernel(x, &FloatParams::from(fmt), mode, u))
}

/// Step of a block with largest magnitude `max_abs`; `None` for an all-zero block.
#[inline]
pub fn block_step(max_abs: f32, fmt: &BlockFloatFormat) -> Option<f32> {
    if max_abs == 0.0 {
        None
    } else {
        Some(fmt.step_for_exponent(floor_log2(max_abs)))
    }
}

/// Pre-computed constants for one block.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BlockParams {
    pub step: f32,
    pub inv_step: f32,
    pub k_min: f32,
    pub k_max: f32,
}

impl BlockParams {
    /// An all-zero block quantizes to zeros under any unit step.
    pub fn new(max_abs: f32, fmt: &BlockFloatFormat) -> Self {
        let step = block_step(max_abs, fmt).unwrap_or(1.0);
        Self {
            step,
            inv_step: 1.0 / step,
            k_min: fmt.k_min() as f32,
            k_max: fmt.k_max() as f32,
        }
    }
}

#[inline(always)]
pub(crate) fn block_kernel(x: f32, p: &BlockParams, mode: RoundingMode, u: f32) -> f32 {
    round_kernel(x * p.inv_step, mode, u).clamp(p.k_min, p.k_max) * p.step
}

/// Quantizes one block sharing the exponent `floor(log2(max |x|))`.
///
/// The step is `2^(E - (wl - 2))` and integers are clamped to
/// `±(2^(wl-1) - 1)`, so the largest element may saturate one step below
/// `2^(E+1)` after rounding up.
pub fn quantize_scalar_block(
    xs: &[f32],
    fmt: &BlockFloatFormat,
    mode: RoundingMode,
    us: Option<&[f32]>,
) -> Result<Vec<f32>> {
    if xs.is_empty() {
        return Err(Error::InvalidArgument("block must be non-empty".into()));
    }
    let mut max_abs = 0.0f32;
    for &x in xs {
        check_finite(x)?;
        max_abs = max_abs.max(x.abs());
    }
    let variates = if mode.is_stochastic() {
        let us = us.ok_or(Error::MissingVariate)?;
        if us.len() != xs.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} variates for a block of {}",
                us.len(),
                xs.len()
            )));
        }
        if let Some(bad) = us.iter().find(|u| !(0.0..1.0).contains(*u)) {
            return Err(Error::InvalidArgument(alloc::format!("variate {bad} is outside [0, 1)")));
        }
        Some(us)
    } else {
        None
    };
    let p = BlockParams::new(max_abs, fmt);
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| block_kernel(x, &p, mode, variates.map_or(0.0, |us| us[i])))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::BlockAssignment;
    use RoundingMode::*;

    fn fixed(wl: u32, fl: i32) -> FixedFormat {
        FixedFormat::saturating(wl, fl).unwrap()
    }

    #[test]
    fn pow2_covers_storage() {
        assert_eq!(pow2(0), 1.0);
        assert_eq!(pow2(-1), 0.5);
        assert_eq!(pow2(127), 2f32.powi(127));
        assert_eq!(pow2(-126), f32::MIN_POSITIVE);
        assert_eq!(pow2(-149), f32::from_bits(1));
    }

    #[test]
    fn floor_log2_at_binade_edges() {
        assert_eq!(floor_log2(1.0), 0);
        assert_eq!(floor_log2(2.0), 1);
        assert_eq!(floor_log2(f32::from_bits(2.0f32.to_bits() - 1)), 0);
        assert_eq!(floor_log2(-0.75), -1);
        assert_eq!(floor_log2(f32::from_bits(1)), -149);
        assert_eq!(floor_log2(f32::MAX), 127);
    }

    #[test]
    fn fixed_examples() {
        assert_eq!(quantize_scalar_fixed(0.74, &fixed(3, 1), NearestEven, None).unwrap(), 0.5);
        assert_eq!(quantize_scalar_fixed(-5.0, &fixed(3, 1), NearestEven, None).unwrap(), -2.0);
        assert_eq!(quantize_scalar_fixed(0.25, &fixed(3, 1), NearestAway, None).unwrap(), 0.5);
        assert_eq!(quantize_scalar_fixed(0.25, &fixed(3, 1), NearestEven, None).unwrap(), 0.0);
        assert_eq!(quantize_scalar_fixed(9.0, &fixed(3, 1), NearestEven, None).unwrap(), 1.5);
    }

    #[test]
    fn fixed_symmetric_clamps_at_minus_kmax() {
        let f = FixedFormat::new(2, 0, true, true).unwrap();
        assert_eq!(quantize_scalar_fixed(-7.0, &f, NearestEven, None).unwrap(), -1.0);
    }

    #[test]
    fn fixed_wrap_is_twos_complement() {
        let f = FixedFormat::new(3, 0, false, false).unwrap();
        // 4 -> -4, 5 -> -3, -5 -> 3, 8 -> 0
        assert_eq!(quantize_scalar_fixed(4.0, &f, NearestEven, None).unwrap(), -4.0);
        assert_eq!(quantize_scalar_fixed(5.0, &f, NearestEven, None).unwrap(), -3.0);
        assert_eq!(quantize_scalar_fixed(-5.0, &f, NearestEven, None).unwrap(), 3.0);
        assert_eq!(quantize_scalar_fixed(8.0, &f, NearestEven, None).unwrap(), 0.0);
        assert_eq!(quantize_scalar_fixed(3.0, &f, NearestEven, None).unwrap(), 3.0);
        assert_eq!(quantize_scalar_fixed(-4.0, &f, NearestEven, None).unwrap(), -4.0);
        assert_eq!(quantize_scalar_fixed(1.0e30, &f, NearestEven, None).unwrap(), 0.0);
    }

    #[test]
    fn fixed_errors() {
        assert!(quantize_scalar_fixed(f32::NAN, &fixed(8, 4), NearestEven, None).is_err());
        assert!(quantize_scalar_fixed(f32::NEG_INFINITY, &fixed(8, 4), NearestEven, None).is_err());
        assert_eq!(
            quantize_scalar_fixed(0.1, &fixed(8, 4), Stochastic, None),
            Err(Error::MissingVariate)
        );
    }

    #[test]
    fn float_examples() {
        let f52 = FloatFormat::new(5, 2).unwrap();
        assert_eq!(quantize_scalar_float(1.3, &f52, NearestEven, None).unwrap(), 1.25);
        let f21 = FloatFormat::new(2, 1).unwrap();
        assert_eq!(quantize_scalar_float(100.0, &f21, NearestEven, None).unwrap(), 6.0);
        assert_eq!(quantize_scalar_float(-100.0, &f21, NearestAway, None).unwrap(), -6.0);
        assert_eq!(quantize_scalar_float(0.0, &f21, NearestEven, None).unwrap(), 0.0);
    }

    #[test]
    fn float_carry_into_next_binade() {
        let f = FloatFormat::new(5, 2).unwrap();
        // 1.875 sits midway between 1.75 and 2.0; 2.0 has the even code.
        assert_eq!(quantize_scalar_float(1.875, &f, NearestEven, None).unwrap(), 2.0);
        assert_eq!(quantize_scalar_float(1.9, &f, NearestEven, None).unwrap(), 2.0);
    }

    #[test]
    fn float_carry_at_top_binade_saturates() {
        let f = FloatFormat::new(2, 1).unwrap();
        // 7.0 is in the top binade [4, 8): 7/2 = 3.5 -> 4 -> 8 > M.
        assert_eq!(quantize_scalar_float(7.0, &f, NearestEven, None).unwrap(), 6.0);
        assert_eq!(quantize_scalar_float(7.0, &f, Stochastic, Some(0.0)).unwrap(), 6.0);
    }

    #[test]
    fn float_underflow_grid() {
        let f = FloatFormat::new(2, 1).unwrap(); // smallest normal 1.0
        assert_eq!(quantize_scalar_float(0.6, &f, NearestEven, None).unwrap(), 1.0);
        assert_eq!(quantize_scalar_float(0.4, &f, NearestEven, None).unwrap(), 0.0);
        assert_eq!(quantize_scalar_float(0.5, &f, NearestEven, None).unwrap(), 0.0);
        assert_eq!(quantize_scalar_float(0.5, &f, NearestAway, None).unwrap(), 1.0);
        assert_eq!(quantize_scalar_float(-0.5, &f, NearestAway, None).unwrap(), -1.0);
        assert_eq!(quantize_scalar_float(0.3, &f, Stochastic, Some(0.2)).unwrap(), 1.0);
        assert_eq!(quantize_scalar_float(0.3, &f, Stochastic, Some(0.3)).unwrap(), 0.0);
        let z = quantize_scalar_float(-0.4, &f, NearestEven, None).unwrap();
        assert_eq!(z.to_bits(), 0);
    }

    #[test]
    fn float_identity_format() {
        for &x in &[1.0f32, -3.75, 1.0e-30, 6.5e37, f32::MAX, -f32::MIN_POSITIVE, 0.1] {
            let q = quantize_scalar_float(x, &FloatFormat::SINGLE, NearestEven, None).unwrap();
            assert_eq!(q.to_bits(), x.to_bits());
            let q = quantize_scalar_float(x, &FloatFormat::SINGLE, Stochastic, Some(0.99)).unwrap();
            assert_eq!(q.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn block_examples() {
        let b = BlockFloatFormat::new(8, BlockAssignment::WholeTensor).unwrap();
        assert_eq!(quantize_scalar_block(&[1.0, 3.0], &b, NearestEven, None).unwrap(), [1.0, 3.0]);
        // E = 1, step = 2^(1-6) = 1/32, 0.7 * 32 = 22.4 -> 22.
        assert_eq!(quantize_scalar_block(&[0.7, 3.0], &b, NearestEven, None).unwrap(), [0.6875, 3.0]);
        assert_eq!(quantize_scalar_block(&[0.0, 0.0], &b, NearestEven, None).unwrap(), [0.0, 0.0]);
        assert_eq!(
            quantize_scalar_block(&[0.0, 0.0], &b, Stochastic, Some(&[0.1, 0.2])).unwrap(),
            [0.0, 0.0]
        );
    }

    #[test]
    fn block_top_element_clamps() {
        let b = BlockFloatFormat::new(4, BlockAssignment::WholeTensor).unwrap();
        // E = 1, step = 0.5, k range [-7, 7]: 3.9/0.5 = 7.8 -> 8 -> 7.
        assert_eq!(quantize_scalar_block(&[3.9], &b, NearestEven, None).unwrap(), [3.5]);
        assert_eq!(quantize_scalar_block(&[-3.9], &b, NearestEven, None).unwrap(), [-3.5]);
    }

    #[test]
    fn block_errors() {
        let b = BlockFloatFormat::new(8, BlockAssignment::WholeTensor).unwrap();
        assert!(quantize_scalar_block(&[], &b, NearestEven, None).is_err());
        assert!(quantize_scalar_block(&[1.0, f32::NAN], &b, NearestEven, None).is_err());
        assert_eq!(quantize_scalar_block(&[1.0], &b, Stochastic, None), Err(Error::MissingVariate));
        assert!(quantize_scalar_block(&[1.0], &b, Stochastic, Some(&[0.1, 0.2])).is_err());
    }
}

use crate::error::{check_finite, Error, Result};

/// How a real value is mapped onto an integer grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundingMode {
    /// Round up in magnitude with probability equal to the fractional distance.
    Stochastic,
    /// Nearest, midpoints to the even neighbour.
    NearestEven,
    /// Nearest, midpoints away from zero.
    NearestAway,
    /// Nearest, midpoints toward zero.
    NearestTowardZero,
}

impl RoundingMode {
    pub const ALL: [RoundingMode; 4] = [
        RoundingMode::Stochastic,
        RoundingMode::NearestEven,
        RoundingMode::NearestAway,
        RoundingMode::NearestTowardZero,
    ];

    pub const NEAREST: [RoundingMode; 3] = [
        RoundingMode::NearestEven,
        RoundingMode::NearestAway,
        RoundingMode::NearestTowardZero,
    ];

    pub fn is_stochastic(self) -> bool {
        self == RoundingMode::Stochastic
    }

    pub fn name(self) -> &'static str {
        match self {
            RoundingMode::Stochastic => "stochastic",
            RoundingMode::NearestEven => "nearest_even",
            RoundingMode::NearestAway => "nearest_away",
            RoundingMode::NearestTowardZero => "nearest_zero",
        }
    }
}

impl core::str::FromStr for RoundingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" => Ok(RoundingMode::Stochastic),
            "nearest_even" | "nearest" => Ok(RoundingMode::NearestEven),
            "nearest_away" => Ok(RoundingMode::NearestAway),
            "nearest_zero" => Ok(RoundingMode::NearestTowardZero),
            other => Err(Error::InvalidArgument(alloc::format!(
                "unknown rounding mode `{other}` (expected stochastic, nearest_even, nearest_away or nearest_zero)"
            ))),
        }
    }
}

impl core::fmt::Display for RoundingMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Rounds `r` to an integral `f32`.
///
/// Nearest modes pick the closest integer and only differ on exact
/// midpoints. Stochastic rounding works on the magnitude: with `a = |r|` it
/// returns `sign(r) * (floor(a) + [u < a - floor(a)])`, so the result moves
/// away from zero with probability equal to the fractional part and the
/// expectation is `r`. `u` must be in `[0, 1)` and is ignored by nearest modes.
///
/// The result is returned as a float because formats with negative
/// fractional length round values far beyond the `i64` range.
pub fn round_to_integral(r: f32, mode: RoundingMode, u: Option<f32>) -> Result<f32> {
    check_finite(r)?;
    if mode.is_stochastic() {
        let u = u.ok_or(Error::MissingVariate)?;
        if !(0.0..1.0).contains(&u) {
            return Err(Error::InvalidArgument(alloc::format!(
                "variate {u} is outside [0, 1)"
            )));
        }
        Ok(round_kernel(r, mode, u))
    } else {
        Ok(round_kernel(r, mode, 0.0))
    }
}

/// Unchecked rounding shared by every quantization path. Infinite input
/// passes through as infinity; NaN never reaches it.
#[inline(always)]
pub(crate) fn round_kernel(r: f32, mode: RoundingMode, u: f32) -> f32 {
    let a = r.abs();
    let k = if mode == RoundingMode::NearestEven {
        // The hardware's own rounding is round-half-to-even.
        if a >= TWO_23 {
            a
        } else {
            (a + TWO_23) - TWO_23
        }
    } else {
        let f = floor_f32(a);
        let d = a - f;
        let up = match mode {
            RoundingMode::Stochastic => u < d,
            RoundingMode::NearestAway => d >= 0.5,
            _ => d > 0.5,
        };
        // Arithmetic rather than a select keeps random data from mispredicting.
        f + up as u32 as f32
    };
    // `+ 0.0` turns a negative zero into positive zero.
    k.copysign(r) + 0.0
}

/// Smallest magnitude at which every `f32` is an integer.
const TWO_23: f32 = 8_388_608.0;

/// Branch-light `floor`. Adding and removing 2^23 rounds to an integer in
/// hardware; the comparison turns that into a floor. Values of magnitude
/// 2^23 and above are already integral.
#[inline(always)]
pub(crate) fn floor_f32(x: f32) -> f32 {
    if x.abs() >= TWO_23 {
        return x;
    }
    let r = ((x.abs() + TWO_23) - TWO_23).copysign(x);
    r - (r > x) as u32 as f32
}

//! Reference answers computed by brute force over enumerated representable
//! sets. Nothing here calls the quantizers under test.

#![allow(dead_code)]

use lowp_core::{enumerate_representable, NumberFormat, RoundingMode};

/// `floor(log2 |x|)` by comparison against powers of two in f64.
pub fn exponent_by_search(x: f32) -> i32 {
    let a = (x as f64).abs();
    assert!(a > 0.0);
    let mut e = 0i32;
    while 2f64.powi(e) > a {
        e -= 1;
    }
    while 2f64.powi(e + 1) <= a {
        e += 1;
    }
    e
}

/// Nearest value of the sorted set `values` to `x`, with exact midpoints
/// resolved by `mode`. "Even" means the neighbour that is an even multiple
/// of the gap between the two neighbours. Out-of-range inputs saturate.
pub fn nearest_in(values: &[f32], x: f32, mode: RoundingMode) -> f32 {
    let (first, last) = (values[0], *values.last().unwrap());
    if x <= first {
        return first;
    }
    if x >= last {
        return last;
    }
    let hi_idx = values.partition_point(|&v| v < x);
    let hi = values[hi_idx];
    if hi == x {
        return x;
    }
    let lo = values[hi_idx - 1];
    let (xd, lod, hid) = (x as f64, lo as f64, hi as f64);
    let (dl, dh) = (xd - lod, hid - xd);
    if dl < dh {
        return lo;
    }
    if dh < dl {
        return hi;
    }
    match mode {
        RoundingMode::NearestEven => {
            let gap = hid - lod;
            if (lod / gap).rem_euclid(2.0) == 0.0 {
                lo
            } else {
                hi
            }
        }
        RoundingMode::NearestAway => {
            if lo.abs() > hi.abs() {
                lo
            } else {
                hi
            }
        }
        RoundingMode::NearestTowardZero => {
            if lo.abs() < hi.abs() {
                lo
            } else {
                hi
            }
        }
        RoundingMode::Stochastic => panic!("nearest_in needs a nearest mode"),
    }
}

/// The two representable neighbours bracketing `x` (equal when `x` is representable).
pub fn neighbours(values: &[f32], x: f32) -> (f32, f32) {
    let hi_idx = values.partition_point(|&v| v < x);
    if hi_idx < values.len() && values[hi_idx] == x {
        return (x, x);
    }
    (values[hi_idx - 1], values[hi_idx])
}

/// Representable set for scalar formats; block formats use the exponent
/// of the given block maximum.
pub fn representable(fmt: &NumberFormat, block_max: Option<f32>) -> Vec<f32> {
    let e = block_max.filter(|m| *m != 0.0).map(exponent_by_search);
    match fmt {
        NumberFormat::Block(_) => enumerate_representable(fmt, Some(e.unwrap_or(0))).unwrap(),
        _ => enumerate_representable(fmt, None).unwrap(),
    }
}

/// Inputs that exercise every region of a format: random values across and
/// beyond its range, exact representables, exact midpoints, and values one
/// ulp either side of midpoints.
pub fn probe_inputs(values: &[f32], count: usize, mut next_u64: impl FnMut() -> u64) -> Vec<f32> {
    let max = values.iter().fold(0f32, |m, v| m.max(v.abs()));
    let smallest = values.iter().filter(|v| **v > 0.0).fold(f32::MAX, |m, v| m.min(*v));
    let mut out = Vec::with_capacity(count);
    let mut unit = || (next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    while out.len() < count {
        let pick = (unit() * 6.0) as u32;
        let x = match pick {
            0 => ((unit() * 2.0 - 1.0) * 1.25 * max as f64) as f32,
            1 => {
                // log-uniform magnitude from well below the smallest step to above max
                let lo = (smallest as f64 / 16.0).ln();
                let hi = (max as f64 * 4.0).ln();
                let m = (lo + unit() * (hi - lo)).exp();
                (if unit() < 0.5 { -m } else { m }) as f32
            }
            2 => values[(unit() * values.len() as f64) as usize % values.len()],
            _ => {
                let i = (unit() * (values.len() - 1) as f64) as usize % (values.len() - 1);
                let mid = ((values[i] as f64 + values[i + 1] as f64) / 2.0) as f32;
                match pick {
                    3 => mid,
                    4 => f32::from_bits(mid.to_bits().wrapping_add(1)),
                    _ => {
                        if mid == 0.0 {
                            mid
                        } else {
                            f32::from_bits(mid.to_bits() - 1)
                        }
                    }
                }
            }
        };
        if x.is_finite() {
            out.push(x);
        }
    }
    out
}

/// SplitMix64 sequence for test input generation, separate from the crate's RNG.
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform_f32(&mut self) -> f32 {
        (self.next_u64() >> 40) as f32 / (1u32 << 24) as f32
    }
}

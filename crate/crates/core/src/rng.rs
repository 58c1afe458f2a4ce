//! Counter-based uniform variates.
//!
//! A variate is a pure function of `(seed, call, index)`, so any element of
//! any quantization call can be regenerated independently. Parallel and
//! sequential kernels therefore draw identical values.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A seeded family of independent streams, one per call counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub const fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-call key; hoist it out of element loops.
    #[inline(always)]
    pub fn call_key(&self, call: u64) -> u64 {
        mix64(self.seed ^ mix64(call.wrapping_add(GAMMA)))
    }

    /// Raw 64 random bits for `(call, index)`.
    #[inline(always)]
    pub fn bits(&self, call: u64, index: u64) -> u64 {
        bits_for_key(self.call_key(call), index)
    }

    #[inline(always)]
    pub fn uniform(&self, call: u64, index: u64) -> f32 {
        uniform_for_key(self.call_key(call), index)
    }

    /// Uniform in `[0, 1)` with 53 bits, for data generation where single
    /// precision granularity is not needed.
    pub fn uniform_f64(&self, call: u64, index: u64) -> f64 {
        (self.bits(call, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[inline(always)]
pub(crate) fn bits_for_key(key: u64, index: u64) -> u64 {
    mix64(key.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)))
}

/// 24 random bits mapped to a multiple of `2^-24` in `[0, 1)`.
#[inline(always)]
pub(crate) fn uniform_for_key(key: u64, index: u64) -> f32 {
    (bits_for_key(key, index) >> 40) as f32 * (1.0 / (1u32 << 24) as f32)
}

/// The variate for element `index` of quantization call `call`.
pub fn uniform_variate(stream: RngStream, call: u64, index: u64) -> f32 {
    stream.uniform(call, index)
}

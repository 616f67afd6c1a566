//! Deterministic seeding primitives.
//!
//! Two database owners never exchange data, yet both must derive bit-identical
//! q-gram encodings from the agreed parameters alone. Every piece of
//! randomness in this crate therefore flows through the fixed primitives in
//! this module: FNV-1a 64 for hashing byte strings into seeds, SplitMix64 as
//! the stream generator, and a partial Fisher-Yates shuffle for
//! without-replacement position selection. All three are trivially portable
//! across languages and produce identical streams everywhere.

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
/// High 64 bits of the FNV 128-bit offset basis; used as a second,
/// independent hash stream for double hashing.
const FNV_OFFSET_BASIS_ALT: u64 = 0x6c62_272e_07bb_0142;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a 64-bit hash of a byte string.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    fnv1a_with_basis(bytes, FNV_OFFSET_BASIS)
}

/// FNV-1a 64-bit hash with the alternate offset basis.
pub fn fnv1a_64_alt(bytes: &[u8]) -> u64 {
    fnv1a_with_basis(bytes, FNV_OFFSET_BASIS_ALT)
}

fn fnv1a_with_basis(bytes: &[u8], basis: u64) -> u64 {
    let mut h = basis;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 stream generator (Vigna). Fast, well-diffused,
/// non-cryptographic.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform f64 in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        const DEN: f64 = (1u64 << 53) as f64;
        ((self.next_u64() >> 11) as f64) / DEN
    }

    /// Uniform integer in [0, n). Plain modulo reduction: the bias is
    /// negligible for the ranges used here (n << 2^64) and the reduction is
    /// identical in any language, which matters more than the last ulp of
    /// uniformity.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }
}

/// One SplitMix64 mixing step applied to `x`; used to derive sub-seeds from
/// integers (e.g. alphabet positions) without constructing a stream.
pub fn splitmix64_mix(x: u64) -> u64 {
    SplitMix64::new(x).next_u64()
}

/// Select `k` distinct positions from [0, n) by partial Fisher-Yates shuffle,
/// returned in selection order.
pub fn select_distinct(rng: &mut SplitMix64, k: usize, n: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut positions: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.next_below((n - i) as u64) as usize;
        positions.swap(i, j);
    }
    positions.truncate(k);
    positions
}

//! Counter-addressed random draws.
//!
//! A draw is a pure function of `(seed, generation, vertex, slot)`, so a
//! generation can evaluate only the vertices that can possibly flip and still
//! produce the same trajectory as a full in-order scan.

/// Stafford's "mix13" 64-bit finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a sequence of words into one seed; used to derive per-cell and
/// per-replicate seeds.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6A09_E667_F3BC_C909, |acc, &p| {
        mix64(acc ^ mix64(p.wrapping_add(0x9E37_79B9_7F4A_7C15)))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x243F_6A88_85A3_08D3),
        }
    }

    /// Raw 64-bit draw number `slot` of `vertex` in `generation`.
    #[inline]
    pub fn word(&self, generation: u64, vertex: u64, slot: u64) -> u64 {
        let g = mix64(self.key ^ generation.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let v = mix64(g ^ (vertex << 1 | slot).wrapping_mul(0xD1B5_4A32_D192_ED03));
        mix64(v.wrapping_add(self.key))
    }

    /// Neighbour choice of `vertex`: `true` picks the right neighbour `i + 1`.
    #[inline]
    pub fn picks_right(&self, generation: u64, vertex: u64) -> bool {
        self.word(generation, vertex, 0) >> 63 == 1
    }

    /// Uniform in `[0, 1)` for the flip coin of `vertex`.
    #[inline]
    pub fn coin(&self, generation: u64, vertex: u64) -> f64 {
        (self.word(generation, vertex, 1) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

//! Portable, seedable random streams.
//!
//! Every stochastic step in this crate draws from [`SplitMix64`], whose output
//! is defined purely by 64-bit integer arithmetic, so a given seed yields the
//! same sequence on every platform and in every language that reimplements
//! the algorithm below.
//!
//! Algorithm (all arithmetic wrapping mod 2^64):
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! return z ^ (z >> 31)
//! ```
//!
//! Sub-streams are derived with [`derive_seed`], which mixes the master seed
//! with an FNV-1a hash of a purpose tag and a key (for example an identity
//! id). Results therefore do not depend on the order in which identities are
//! processed.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_OFFSET: u64 = 0xCBF2_9CE4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;

/// The SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(FNV_OFFSET, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Derives an independent stream seed: `mix64(seed + mix64(fnv1a(tag) ^ mix64(fnv1a(key))))`.
pub fn derive_seed(seed: u64, tag: &str, key: &str) -> u64 {
    mix64(seed.wrapping_add(mix64(fnv1a(tag) ^ mix64(fnv1a(key)))))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn from_stream(seed: u64, tag: &str, key: &str) -> Self {
        Self::new(derive_seed(seed, tag, key))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution: `(x >> 11) * 2^-53`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`. Exact: raw draws below
    /// `2^64 mod bound` are rejected before reducing modulo `bound`.
    ///
    /// Panics if `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() requires a positive bound");
        let reject_under = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= reject_under {
                return x % bound;
            }
        }
    }

    /// Standard normal deviate by the Marsaglia polar method.
    ///
    /// Branch order: draw `u = 2·U₁ − 1`, then `v = 2·U₂ − 1`; reject the pair
    /// when `s = u² + v²` is `0` or `≥ 1`; otherwise return
    /// `u · sqrt(−2 ln s / s)`. The companion value `v · …` is discarded, so
    /// each call consumes an even number of raw draws and keeps no state.
    /// `ln` comes from the `libm` crate for cross-platform bit equality.
    pub fn next_gaussian(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * libm::log(s) / s).sqrt();
            }
        }
    }
}

/// Draws `k` distinct indices from `0..n` uniformly without replacement, in
/// draw order, using a partial Fisher–Yates shuffle over a virtual identity
/// permutation. Only displaced slots are materialised, so memory is `O(k)`
/// regardless of `n`.
///
/// Panics if `k > n`.
pub fn sample_indices(rng: &mut SplitMix64, n: u64, k: usize) -> Vec<u64> {
    assert!(k as u64 <= n, "cannot draw {k} distinct indices from {n}");
    let mut displaced: std::collections::HashMap<u64, u64> =
        std::collections::HashMap::with_capacity(k * 2);
    let mut out = Vec::with_capacity(k);
    for i in 0..k as u64 {
        let j = i + rng.below(n - i);
        let at_j = *displaced.get(&j).unwrap_or(&j);
        let at_i = *displaced.get(&i).unwrap_or(&i);
        displaced.insert(j, at_i);
        out.push(at_j);
    }
    out
}

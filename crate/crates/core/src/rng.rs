//! Deterministic random streams.
//!
//! Every run owns exactly one stream, derived from the master seed. Sweep
//! children derive their seed with [`child_seed`], so any single child can be
//! re-run in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for child run `index` of a sweep started from `master`.
///
/// `mix64(master ^ mix64(index + 0x9e3779b97f4a7c15))`
pub fn child_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Number of Bernoulli(p) failures before the first success.
///
/// Drawing this once is equivalent in distribution to drawing one Bernoulli
/// trial per step until success. Returns `u64::MAX` for `p <= 0`.
pub fn geometric_gap<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p <= 0.0 {
        return u64::MAX;
    }
    if p >= 1.0 {
        return 0;
    }
    // u in (0, 1]
    let u: f64 = 1.0 - rng.random::<f64>();
    let gap = (u.ln() / (-p).ln_1p()).floor();
    if gap >= u64::MAX as f64 {
        u64::MAX
    } else {
        gap as u64
    }
}

//! Seeded randomness. Every randomized step draws from its own ChaCha stream
//! so that results depend only on the seed, never on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Stream identifiers for the independent randomized steps.
pub(crate) mod streams {
    pub const NORMAL_RANK: u64 = 1;
    pub const COMPRESSION: u64 = 2;
    pub const MU_POOL: u64 = 3;
    pub const SELECTORS: u64 = 4;
    pub const SWEEP: u64 = 5;
    pub const TRIALS: u64 = 6;
}

pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// Sub-seed for item `index` of a batch driven by `seed`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(streams::SWEEP);
    rng.set_word_pos(u128::from(index) * 16);
    rng.gen()
}

/// Nonzero vector with integer entries in `[-5, 5]`.
pub fn selector<S: Scalar>(rng: &mut impl Rng, len: usize) -> Vec<S> {
    loop {
        let v: Vec<i64> = (0..len).map(|_| rng.gen_range(-5..=5)).collect();
        if len == 0 || v.iter().any(|&x| x != 0) {
            return v.into_iter().map(S::from_i64).collect();
        }
    }
}

/// Random rational `num / den` with `num` in `lo..=hi`, `den` in `1..=max_den`.
pub fn small_rational<S: Scalar>(rng: &mut impl Rng, lo: i64, hi: i64, max_den: i64) -> S {
    let num = rng.gen_range(lo..=hi);
    let den = rng.gen_range(1..=max_den);
    S::from_ratio(num, den)
}

//! Seeded randomness. Every random choice in the crate flows through here.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type DetRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> DetRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` distinct unordered pairs from `items` (all of them when fewer exist),
/// in a deterministic order.
pub fn sample_pairs(items: &[usize], count: usize, seed: u64) -> Vec<(usize, usize)> {
    let m = items.len();
    let total = m * m.saturating_sub(1) / 2;
    let mut out = Vec::new();
    if total <= count {
        for i in 0..m {
            for j in i + 1..m {
                out.push((items[i], items[j]));
            }
        }
        return out;
    }
    let mut r = seeded(seed);
    let mut seen = std::collections::BTreeSet::new();
    while out.len() < count {
        let i = r.gen_range(0..m);
        let j = r.gen_range(0..m);
        if i == j {
            continue;
        }
        let key = (i.min(j), i.max(j));
        if seen.insert(key) {
            out.push((items[key.0], items[key.1]));
        }
    }
    out
}

pub fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(&mut seeded(seed));
    v
}

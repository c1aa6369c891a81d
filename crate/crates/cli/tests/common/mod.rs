//! Seeded random targets shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashSet;

use nlstar::CanonicalRegex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_SIZE: usize = 8;

/// `count` distinct closed canonical expressions over {a, b} with at most
/// `MAX_SIZE` nodes and binder depth in `min_theta..=max_theta`.
pub fn corpus(seed: u64, count: usize, min_theta: u32, max_theta: u32) -> Vec<CanonicalRegex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    while out.len() < count {
        let budget = rng.gen_range(2..=MAX_SIZE);
        let re = gen(&mut rng, budget, 0, max_theta);
        if re.size() <= MAX_SIZE && (min_theta..=max_theta).contains(&re.theta()) && seen.insert(re.to_string()) {
            out.push(re);
        }
    }
    out
}

fn gen(rng: &mut ChaCha8Rng, budget: usize, level: u32, max_theta: u32) -> CanonicalRegex {
    if budget <= 1 {
        return leaf(rng, level);
    }
    match rng.gen_range(0..10) {
        0..=2 if budget >= 3 => {
            let l = rng.gen_range(1..budget - 1);
            CanonicalRegex::sum(gen(rng, l, level, max_theta), gen(rng, budget - 1 - l, level, max_theta))
        }
        3..=5 if budget >= 3 => {
            let l = rng.gen_range(1..budget - 1);
            CanonicalRegex::concat(gen(rng, l, level, max_theta), gen(rng, budget - 1 - l, level, max_theta))
        }
        6 => CanonicalRegex::star(gen(rng, budget - 1, level, max_theta)),
        7..=9 if level < max_theta => CanonicalRegex::binder(level + 1, gen(rng, budget - 1, level + 1, max_theta)),
        _ => leaf(rng, level),
    }
}

fn leaf(rng: &mut ChaCha8Rng, level: u32) -> CanonicalRegex {
    if level > 0 && rng.gen_bool(0.45) {
        return CanonicalRegex::Idx(rng.gen_range(1..=level));
    }
    match rng.gen_range(0..20) {
        0..=6 => CanonicalRegex::letter("a"),
        7..=13 => CanonicalRegex::letter("b"),
        14..=17 => CanonicalRegex::Epsilon,
        _ => CanonicalRegex::Empty,
    }
}

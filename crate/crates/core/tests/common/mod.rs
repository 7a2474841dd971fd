#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rosetta_core::{Family, FamilySpec, Role, RoleFunction, Signal1D};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform samples in `[-amp, amp]`, length drawn from `lengths`.
pub fn random_signal(
    rng: &mut ChaCha8Rng,
    lengths: std::ops::RangeInclusive<usize>,
    amp: f64,
) -> Signal1D {
    let n = rng.random_range(lengths);
    let v = (0..n).map(|_| rng.random_range(-amp..=amp)).collect();
    Signal1D::unit(v).unwrap()
}

pub fn activation(fam: Family) -> RoleFunction {
    RoleFunction::family(FamilySpec::unit(fam), Role::Activation)
}

/// 100 points evenly spread over [-10, 10].
pub fn sample_points() -> Vec<f64> {
    (0..100).map(|i| -10.0 + 20.0 * i as f64 / 99.0).collect()
}

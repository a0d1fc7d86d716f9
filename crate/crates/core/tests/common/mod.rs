use proptest::test_runner::{Config, RngSeed};

/// Deterministic proptest configuration.
pub fn config(cases: u32, seed: u64) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..Config::default() }
}

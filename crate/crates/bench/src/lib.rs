//! Fixtures shared by the benchmark targets.

use spdesign_core::sampling::{baseline_design, sample_sobol};
use spdesign_core::{BaselineKind, Design, RngConfig, SampleBatch};

/// Random design plus a Sobol batch of `4096 max 50n` points.
pub fn fixture(n: usize, p: usize, seed: u64) -> (Design, SampleBatch) {
    let rng = RngConfig::new(seed);
    let d = baseline_design(BaselineKind::Random, n, p, rng.derive(1)).expect("valid size");
    let b = sample_sobol(4096.max(50 * n), p, rng.derive(2)).expect("valid size");
    (d, b)
}

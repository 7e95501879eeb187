//! Shared helpers for the unit-test modules.

use crate::matrix::Matrix;

/// Deterministic xorshift generator for test matrices; keeps the suites
/// reproducible without dragging RNG crates into unit tests.
pub(crate) struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493))
    }

    pub fn next_f64(&mut self) -> f64 {
        // xorshift64*; take the high 53 bits as a uniform in [0, 1).
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        let bits = x.wrapping_mul(0x2545F4914F6CDD1D) >> 11;
        bits as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn index(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

/// Random SPD matrix `WᵀW + ridge·I` of order `n`.
pub(crate) fn random_spd(rng: &mut TestRng, n: usize, ridge: f64) -> Matrix {
    let w = Matrix::from_fn(n, n, |_, _| rng.range(-1.0, 1.0));
    w.gram().add_diag(ridge)
}

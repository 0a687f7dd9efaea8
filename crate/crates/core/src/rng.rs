//! Deterministic RNG streams.
//!
//! Every randomized component draws from a ChaCha8 generator whose stream
//! index is derived from the work item (trial index, search start, audit
//! sample). Streams are independent of scheduling, so parallel runs tally
//! bit-for-bit with serial ones and identical seeds reproduce identical
//! output.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{CVector, C64};

/// Generator for one work item: `seed` selects the experiment, `stream` the
/// item within it.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal draw by Box-Muller over the generator's uniform output.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Haar-like random unit vector from complex Gaussian entries.
pub fn random_unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    loop {
        let v = CVector::new(
            (0..dim)
                .map(|_| C64::new(standard_normal(rng), standard_normal(rng)))
                .collect(),
        )
        .expect("finite");
        if let Some(u) = v.normalized(1e-9) {
            return u;
        }
    }
}

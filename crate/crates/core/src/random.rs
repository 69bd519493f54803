//! Seeded random streams.
//!
//! Every generator is a ChaCha8 stream keyed by `(seed, index)`: ChaCha is
//! counter based, so sample `index` of a sweep sees the same numbers no
//! matter which thread evaluates it or in which order.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{C64, CMatrix};

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Complex Gaussian entries with independent standard-normal real and
/// imaginary parts (variance 2 per entry).
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Uniform `[0, 1)` draws scaled to sum to one.
pub fn uniform_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 && raw.iter().all(|&x| x > 0.0) {
            return raw.into_iter().map(|x| x / total).collect();
        }
    }
}

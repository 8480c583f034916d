//! Deterministic synthetic binary datasets for demos and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::BinaryDataset;

/// Independent fair coins.
pub fn coins(n_samples: usize, n_dims: usize, seed: u64) -> BinaryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<u8>> = (0..n_samples)
        .map(|_| (0..n_dims).map(|_| rng.random_range(0..=1)).collect())
        .collect();
    BinaryDataset::from_rows(&rows).unwrap()
}

/// Markov chain of bits: the first coordinate is a fair coin and each later
/// coordinate flips the previous one with probability `flip_prob`.
pub fn chain(n_samples: usize, n_dims: usize, flip_prob: f64, seed: u64) -> BinaryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<u8>> = (0..n_samples)
        .map(|_| {
            let mut row = Vec::with_capacity(n_dims);
            let mut bit: u8 = rng.random_range(0..=1);
            row.push(bit);
            for _ in 1..n_dims {
                if rng.random::<f64>() < flip_prob {
                    bit ^= 1;
                }
                row.push(bit);
            }
            row
        })
        .collect();
    BinaryDataset::from_rows(&rows).unwrap()
}

/// Mixture of random prototype patterns observed through independent bit
/// flips with probability `noise`. The prototypes depend only on
/// `structure_seed`, so several splits of the same distribution can be drawn
/// with different `sample_seed` values.
pub fn clusters(
    n_samples: usize,
    n_dims: usize,
    n_prototypes: usize,
    noise: f64,
    structure_seed: u64,
    sample_seed: u64,
) -> BinaryDataset {
    assert!(n_prototypes >= 1);
    let mut proto_rng = ChaCha8Rng::seed_from_u64(structure_seed);
    let prototypes: Vec<Vec<u8>> = (0..n_prototypes)
        .map(|_| (0..n_dims).map(|_| proto_rng.random_range(0..=1)).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    rng.set_stream(0xc10c);
    let rows: Vec<Vec<u8>> = (0..n_samples)
        .map(|_| {
            let proto = &prototypes[rng.random_range(0..n_prototypes)];
            proto
                .iter()
                .map(|&b| if rng.random::<f64>() < noise { b ^ 1 } else { b })
                .collect()
        })
        .collect();
    BinaryDataset::from_rows(&rows).unwrap()
}

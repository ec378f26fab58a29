//! Seeded random TT tensors and operators for tests and benchmarks.

use ndarray::{Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AptError, Result};
use crate::tt::{DenseTensor, TtOperator, TtTensor};

/// Random TT with uniform entries in `[-1, 1)`. `ranks` lists the `d - 1`
/// interior bonds.
pub fn random_tt(modes: &[usize], ranks: &[usize], seed: u64) -> Result<TtTensor> {
    let bonds = bonds(modes.len(), ranks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cores = modes
        .iter()
        .enumerate()
        .map(|(k, &n)| Array3::from_shape_fn((bonds[k], n, bonds[k + 1]), |_| rng.random_range(-1.0..1.0)))
        .collect();
    TtTensor::new(cores)
}

/// Random TT operator with uniform entries in `[-1, 1)`.
pub fn random_operator(modes: &[usize], ranks: &[usize], seed: u64) -> Result<TtOperator> {
    let bonds = bonds(modes.len(), ranks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cores = modes
        .iter()
        .enumerate()
        .map(|(k, &n)| Array4::from_shape_fn((bonds[k], n, n, bonds[k + 1]), |_| rng.random_range(-1.0..1.0)))
        .collect();
    TtOperator::new(cores)
}

pub fn random_dense(shape: &[usize], seed: u64) -> DenseTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseTensor::new(shape.to_vec(), data).expect("consistent size")
}

fn bonds(d: usize, ranks: &[usize]) -> Result<Vec<usize>> {
    if d == 0 || ranks.len() + 1 != d || ranks.contains(&0) {
        return Err(AptError::InvalidArgument(format!(
            "{d} modes need {} positive interior ranks, got {ranks:?}",
            d.saturating_sub(1)
        )));
    }
    let mut b = vec![1];
    b.extend_from_slice(ranks);
    b.push(1);
    Ok(b)
}

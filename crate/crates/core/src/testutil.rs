use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::IncompleteDataset;

/// Independent standard normal predictors with a linear response and cells
/// removed with probability `missing`. The first two rows are kept fully
/// observed so every column can be centered.
pub fn random_masked(n: usize, p: usize, missing: f64, seed: u64) -> IncompleteDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let beta = DVector::from_fn(p, |j, _| if j % 2 == 0 { 1.0 } else { -0.5 });
    let y = &x * beta + DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mask = DMatrix::from_fn(n, p, |i, _| i < 2 || rng.random::<f64>() >= missing);
    IncompleteDataset::new(x, mask, y).unwrap()
}

pub fn random_symmetric(p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    (&a + a.transpose()) * 0.5
}

pub fn random_psd(p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(p, p + 2, |_, _| rng.sample::<f64, _>(StandardNormal));
    &a * a.transpose() / (p + 2) as f64
}
